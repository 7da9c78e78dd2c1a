#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kathleen/common.hpp"
#include "kathleen/rng.hpp"

namespace kathleen {

/// Padded byte matrix with validity mask and labels. Mask is a prefix mask:
/// valid positions are contiguous from 0 and every row has at least one.
struct ByteBatch {
    int64_t bsz = 0;
    int64_t len = 0;
    std::vector<uint8_t> bytes;  // bsz * len, pad = 0
    std::vector<uint8_t> mask;   // bsz * len, 1 = valid
    std::vector<int> labels;     // bsz
};

struct TextDataset {
    std::vector<std::string> texts;
    std::vector<int> labels;
    std::vector<std::string> class_names;

    int num_classes() const { return static_cast<int>(class_names.size()); }
};

struct DatasetSpec {
    std::string path;
    std::string format = "csv";  // csv | tsv | jsonl
    std::string text_field = "text";
    std::string label_field = "label";
    std::vector<std::string> class_names;
};

/// Parses the file per spec; malformed rows and unknown labels are hard
/// errors carrying the line number / the declared class names.
TextDataset load_dataset(const DatasetSpec& spec);

/// UTF-8 bytes of each text, prefix-truncated to max_len and zero-padded.
/// Every batch is padded to exactly max_len. An empty text becomes a single
/// pad byte with mask=1 at position 0 (counted, not dropped).
struct BatchStats {
    int64_t empty_texts = 0;
    int64_t truncated = 0;
};

ByteBatch make_batch(const std::vector<std::string>& texts, const std::vector<int>& labels,
                     const std::vector<size_t>& order, size_t begin, size_t end, int64_t max_len,
                     BatchStats* stats);

/// Shuffle order comes solely from rng (pass nullptr for source order).
std::vector<ByteBatch> make_batches(const TextDataset& ds, int64_t max_len, int64_t batch_size,
                                    Prng* rng, BatchStats* stats = nullptr);

}  // namespace kathleen
