#include "wkforge/intention.hpp"

#include "json_util.hpp"
#include "wkforge/errors.hpp"
#include "wkforge/text.hpp"

#include <cmath>

namespace wkforge {

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::Text: return "text";
        case Modality::Image: return "image";
        case Modality::Audio: return "audio";
        case Modality::Video: return "video";
    }
    return "unknown";
}

Modality modality_from_string(std::string_view name) {
    const auto n = text::ascii_lower(name);
    if (n == "text") return Modality::Text;
    if (n == "image") return Modality::Image;
    if (n == "audio") return Modality::Audio;
    if (n == "video") return Modality::Video;
    throw Error(ErrorCode::InvalidInput, "unknown modality '" + std::string(name) + "'");
}

void IntentionBundle::validate() const {
    if (client_input.empty()) throw Error(ErrorCode::InvalidInput, "intention requires a client input");
    const bool has_output = client_output && !client_output->empty();
    const bool has_context = process_context && !process_context->empty();
    if (!has_output && !has_context) {
        throw Error(ErrorCode::InvalidInput, "intention requires a client output or a process context besides the input");
    }
}

namespace {

std::string normalize_text(std::string_view raw, const std::string& source) {
    if (!text::is_valid_utf8(raw)) throw Error(ErrorCode::InvalidInput, "payload of '" + source + "' is not valid UTF-8");
    if (raw.starts_with("\xEF\xBB\xBF")) raw.remove_prefix(3);
    auto out = text::collapse_whitespace(raw);
    if (out.empty()) throw Error(ErrorCode::InvalidInput, "payload of '" + source + "' has no text");
    return out;
}

const std::vector<ModalityItem> kNoItems;

const std::vector<ModalityItem>& items_or_empty(const std::optional<std::vector<ModalityItem>>& items) {
    return items ? *items : kNoItems;
}

std::string joined_text(const std::vector<ModalityItem>& items) {
    std::string out;
    for (const auto& item : items) {
        if (!item.canonical_text) {
            throw Error(ErrorCode::InvalidInput, "item '" + item.source + "' has not been preprocessed");
        }
        if (!out.empty()) out += " ; ";
        out += *item.canonical_text;
    }
    return out;
}

std::string clip(const std::string& s, std::size_t limit) {
    if (s.size() <= limit) return s;
    std::size_t cut = limit;
    // never split a UTF-8 sequence
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return s.substr(0, cut) + "...";
}

} // namespace

std::string offline_ocr(std::string_view payload) {
    if (!text::is_valid_utf8(payload)) throw Error(ErrorCode::InvalidInput, "image payload carries no decodable text");
    return std::string(payload);
}

ModalityItem preprocess_input(ModalityItem item, const OcrEngine& ocr) {
    if (item.payload.empty()) throw Error(ErrorCode::InvalidInput, "empty payload in '" + item.source + "'");
    switch (item.modality) {
        case Modality::Text:
            item.canonical_text = normalize_text(item.payload, item.source);
            break;
        case Modality::Image:
            item.canonical_text = normalize_text(ocr(item.payload), item.source);
            break;
        case Modality::Audio:
        case Modality::Video:
            throw Error(ErrorCode::UnsupportedModality,
                        std::string(to_string(item.modality)) + " input '" + item.source + "' is not supported");
    }
    return item;
}

void preprocess_bundle(IntentionBundle& bundle, const OcrEngine& ocr) {
    for (auto& item : bundle.client_input) item = preprocess_input(std::move(item), ocr);
    if (bundle.client_output) {
        for (auto& item : *bundle.client_output) item = preprocess_input(std::move(item), ocr);
    }
    if (bundle.process_context) {
        for (auto& item : *bundle.process_context) item = preprocess_input(std::move(item), ocr);
    }
}

EmbeddingVector encode_modality(const ModalityItem& item, Embedder& embedder) {
    if (!item.canonical_text) throw Error(ErrorCode::InvalidInput, "item '" + item.source + "' has not been preprocessed");
    return embedder.embed(*item.canonical_text);
}

EncodedIntention encode_intention(const IntentionBundle& bundle, Embedder& embedder) {
    bundle.validate();

    std::vector<double> total(embedder.dimension(), 0.0);
    std::map<Modality, std::vector<double>> by_modality;
    auto add = [&](const std::vector<ModalityItem>& items) {
        for (const auto& item : items) {
            const auto v = encode_modality(item, embedder);
            auto& slot = by_modality[item.modality];
            slot.resize(v.dim(), 0.0);
            for (std::size_t i = 0; i < v.dim(); ++i) {
                total[i] += v.values[i];
                slot[i] += v.values[i];
            }
        }
    };
    add(bundle.client_input);
    add(items_or_empty(bundle.client_output));
    add(items_or_empty(bundle.process_context));

    EncodedIntention enc;
    try {
        // sum and mean share a direction
        enc.gamma = normalized(std::move(total));
    } catch (const Error&) {
        throw Error(ErrorCode::InvalidInput, "intention items cancel out to a zero vector");
    }
    for (auto& [m, sum] : by_modality) {
        try {
            enc.per_modality.emplace(m, normalized(std::move(sum)));
        } catch (const Error&) {
            throw Error(ErrorCode::InvalidInput, std::string(to_string(m)) + " items cancel out to a zero vector");
        }
    }
    return enc;
}

DecodedIntention decode_intention_offline(const IntentionBundle& bundle) {
    bundle.validate();
    const std::string input = joined_text(bundle.client_input);
    const std::string output = joined_text(items_or_empty(bundle.client_output));
    const std::string context = joined_text(items_or_empty(bundle.process_context));

    auto summary = [&](bool with_output, bool with_context) {
        std::string s = std::string(kInferredMarker) + " derived from client input \"" + clip(input, 160) + "\"";
        if (with_output && !output.empty()) s += " and client output \"" + clip(output, 160) + "\"";
        if (with_context && !context.empty()) s += " and process context \"" + clip(context, 160) + "\"";
        return s;
    };

    DecodedIntention d;
    d.input_description = input;
    d.output_description = output.empty() ? summary(false, true) : output;
    d.process_description = context.empty() ? summary(true, false) : context;
    return d;
}

std::string build_decoder_prompt(const IntentionBundle& bundle) {
    std::string p =
        "Describe the work to perform. From the material below, write exactly three lines:\n"
        "INPUT: <what the client provides>\n"
        "OUTPUT: <what the client expects back>\n"
        "PROCESS: <the process that turns the input into the output>\n"
        "When the output or the process is not given, infer it from the rest.\n\n";
    p += "Client input:\n" + joined_text(bundle.client_input) + "\n\n";
    p += "Client output:\n" + (bundle.client_output ? joined_text(*bundle.client_output) : std::string("(missing)")) + "\n\n";
    p += "Process context:\n" +
         (bundle.process_context ? joined_text(*bundle.process_context) : std::string("(missing)")) + "\n";
    return p;
}

DecodedIntention parse_decoded_intention(std::string_view reply) {
    DecodedIntention d;
    for (const auto& raw : text::split_lines(reply)) {
        const auto line = text::trim(raw);
        auto take = [&](std::string_view key, std::string& field) {
            if (line.size() < key.size() || text::ascii_lower(line.substr(0, key.size())) != key) return false;
            field = text::collapse_whitespace(line.substr(key.size()));
            return true;
        };
        if (take("input:", d.input_description) || take("output:", d.output_description) ||
            take("process:", d.process_description)) {
            continue;
        }
    }
    if (d.input_description.empty() || d.output_description.empty() || d.process_description.empty()) {
        throw Error(ErrorCode::MalformedResponse, "decoder reply lacks one of INPUT:/OUTPUT:/PROCESS:");
    }
    return d;
}

DecodedIntention decode_intention_online(const IntentionBundle& bundle, Generator& generator) {
    bundle.validate();
    return parse_decoded_intention(generator.complete(build_decoder_prompt(bundle)));
}

DecodedIntention decode_intention(const EncodedIntention& enc, const IntentionBundle& bundle,
                                  const ProviderConfig& cfg, Generator& generator) {
    if (enc.gamma.dim() == 0 || std::abs(enc.gamma.norm() - 1.0) > 1e-9 || enc.per_modality.empty()) {
        throw Error(ErrorCode::InvalidInput, "encoded intention is not valid");
    }
    if (cfg.offline_mode) return decode_intention_offline(bundle);
    return decode_intention_online(bundle, generator);
}

IntentionBundle load_intention_bundle(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    const std::string source = manifest_path.string();
    const auto doc = detail::parse_document(detail::read_file(manifest_path), source);
    const auto& files = detail::require_array(doc, "files", source, "");

    IntentionBundle bundle;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const std::string ptr = "/files/" + std::to_string(i);
        const auto rel = detail::require_string(files[i], "path", source, ptr, true);
        const auto modality_name = detail::require_string(files[i], "modality", source, ptr, true);

        const std::filesystem::path rel_path(rel);
        if (rel_path.is_absolute()) detail::field_error(source, ptr + "/path", "must be relative");
        for (const auto& part : rel_path) {
            if (part == "..") detail::field_error(source, ptr + "/path", "must stay inside the bundle");
        }
        const std::string component = rel_path.begin()->string();

        ModalityItem item;
        try {
            item.modality = modality_from_string(modality_name);
        } catch (const Error& e) {
            detail::field_error(source, ptr + "/modality", e.what());
        }
        if (component != "input" && component != "output" && component != "context") {
            detail::field_error(source, ptr + "/path", "must start with input/, output/ or context/");
        }
        item.source = rel;
        item.payload = detail::read_file(dir / rel_path);

        if (component == "input") {
            bundle.client_input.push_back(std::move(item));
        } else if (component == "output") {
            if (!bundle.client_output) bundle.client_output.emplace();
            bundle.client_output->push_back(std::move(item));
        } else {
            if (!bundle.process_context) bundle.process_context.emplace();
            bundle.process_context->push_back(std::move(item));
        }
    }
    return bundle;
}

} // namespace wkforge
