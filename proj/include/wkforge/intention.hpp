#pragma once

#include "wkforge/providers.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wkforge {

enum class Modality { Text, Image, Audio, Video };

std::string_view to_string(Modality m);
// Throws InvalidInput for an unknown name.
Modality modality_from_string(std::string_view name);

struct ModalityItem {
    Modality modality = Modality::Text;
    std::string payload; // raw bytes
    std::optional<std::string> canonical_text;
    std::string source;  // file name or label, informational
};

struct IntentionBundle {
    std::vector<ModalityItem> client_input;
    std::optional<std::vector<ModalityItem>> client_output;
    std::optional<std::vector<ModalityItem>> process_context;

    // Client input plus at least one of client output / process context.
    void validate() const;
};

struct EncodedIntention {
    EmbeddingVector gamma;
    // Normalized mean of the item vectors of each modality present.
    std::map<Modality, EmbeddingVector> per_modality;
};

struct DecodedIntention {
    std::string input_description;
    std::string output_description;
    std::string process_description;
};

inline constexpr std::string_view kInferredMarker = "INFERRED:";

// Image-to-text extraction used for image items.
using OcrEngine = std::function<std::string(std::string_view payload)>;

// Offline OCR: the payload is the embedded text itself and must be valid UTF-8.
std::string offline_ocr(std::string_view payload);

// Text: UTF-8 validated, BOM stripped, whitespace collapsed. Image: OCR then the
// same normalization. Audio and video raise UnsupportedModality.
ModalityItem preprocess_input(ModalityItem item, const OcrEngine& ocr = offline_ocr);

// Embedding of the canonical text. Throws InvalidInput if the item has not been preprocessed.
EmbeddingVector encode_modality(const ModalityItem& item, Embedder& embedder);

// Preprocesses every item of the bundle in place.
void preprocess_bundle(IntentionBundle& bundle, const OcrEngine& ocr = offline_ocr);

// Gamma = L2-normalized mean of every item's vector. Items must already be preprocessed.
EncodedIntention encode_intention(const IntentionBundle& bundle, Embedder& embedder);

// Offline template decoding; a missing component is filled with
// "INFERRED: " plus a summary of the components that are present.
DecodedIntention decode_intention_offline(const IntentionBundle& bundle);

// Prompts the generation backend and parses INPUT:/OUTPUT:/PROCESS: lines.
// Throws MalformedResponse when the three fields cannot be recovered.
DecodedIntention decode_intention_online(const IntentionBundle& bundle, Generator& generator);

// Offline configurations use the template, online ones the backend. `enc` must
// carry a unit-norm gamma.
DecodedIntention decode_intention(const EncodedIntention& enc, const IntentionBundle& bundle,
                                  const ProviderConfig& cfg, Generator& generator);

// Builds the decoder prompt; exposed for tests and for custom backends.
std::string build_decoder_prompt(const IntentionBundle& bundle);
DecodedIntention parse_decoded_intention(std::string_view reply);

// Reads a bundle directory: input/, output/, context/ plus manifest.json of the form
// {"files": [{"path": "input/notes.txt", "modality": "text"}, ...]}.
IntentionBundle load_intention_bundle(const std::filesystem::path& dir);

} // namespace wkforge
