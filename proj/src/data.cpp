#include "kathleen/data.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace kathleen {

namespace {

// RFC-4180 style reader: quoted fields may contain the delimiter, doubled
// quotes, and newlines. Returns false at EOF. line_no tracks the line the
// record started on, for error messages.
bool read_record(std::istream& in, char delim, std::vector<std::string>& fields, int64_t& line_no,
                 int64_t& next_line) {
    fields.clear();
    int c = in.peek();
    if (c == EOF) return false;
    line_no = next_line;
    std::string field;
    bool quoted = false;
    bool any = false;
    while (true) {
        c = in.get();
        if (c == EOF) {
            if (quoted) throw IoError("line " + std::to_string(line_no) + ": unterminated quoted field");
            fields.push_back(field);
            return any || !fields.empty();
        }
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') next_line++;
                field.push_back(static_cast<char>(c));
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim) {
            fields.push_back(field);
            field.clear();
        } else if (c == '\r') {
            // swallow; newline handling follows
        } else if (c == '\n') {
            next_line++;
            fields.push_back(field);
            return true;
        } else {
            field.push_back(static_cast<char>(c));
        }
    }
}

int resolve_label(const std::string& token, const std::vector<std::string>& class_names,
                  int64_t line_no) {
    for (size_t i = 0; i < class_names.size(); ++i) {
        if (class_names[i] == token) return static_cast<int>(i);
    }
    // numeric labels are accepted when in range
    try {
        size_t pos = 0;
        int v = std::stoi(token, &pos);
        if (pos == token.size() && v >= 0 && v < static_cast<int>(class_names.size())) return v;
    } catch (const std::exception&) {
    }
    std::string names;
    for (size_t i = 0; i < class_names.size(); ++i) {
        if (i) names += ", ";
        names += class_names[i];
    }
    throw ConfigError("line " + std::to_string(line_no) + ": unknown label '" + token +
                      "' (classes: " + names + ")");
}

TextDataset load_delimited(const DatasetSpec& spec, char delim) {
    std::ifstream in(spec.path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + spec.path);
    std::vector<std::string> fields;
    int64_t line_no = 1, next_line = 1;
    if (!read_record(in, delim, fields, line_no, next_line)) {
        throw IoError(spec.path + ": empty file");
    }
    int64_t text_col = -1, label_col = -1;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == spec.text_field) text_col = static_cast<int64_t>(i);
        if (fields[i] == spec.label_field) label_col = static_cast<int64_t>(i);
    }
    if (text_col < 0) throw ConfigError(spec.path + ": header has no '" + spec.text_field + "' column");
    if (label_col < 0) throw ConfigError(spec.path + ": header has no '" + spec.label_field + "' column");

    TextDataset ds;
    ds.class_names = spec.class_names;
    const size_t ncols = fields.size();
    while (read_record(in, delim, fields, line_no, next_line)) {
        if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
        if (fields.size() != ncols) {
            throw IoError(spec.path + " line " + std::to_string(line_no) + ": expected " +
                          std::to_string(ncols) + " fields, got " + std::to_string(fields.size()));
        }
        ds.texts.push_back(fields[static_cast<size_t>(text_col)]);
        ds.labels.push_back(resolve_label(fields[static_cast<size_t>(label_col)], ds.class_names, line_no));
    }
    return ds;
}

TextDataset load_jsonl(const DatasetSpec& spec) {
    std::ifstream in(spec.path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + spec.path);
    TextDataset ds;
    ds.class_names = spec.class_names;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw IoError(spec.path + " line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains(spec.text_field)) {
            throw IoError(spec.path + " line " + std::to_string(line_no) + ": missing field '" +
                          spec.text_field + "'");
        }
        if (!j.contains(spec.label_field)) {
            throw IoError(spec.path + " line " + std::to_string(line_no) + ": missing field '" +
                          spec.label_field + "'");
        }
        ds.texts.push_back(j[spec.text_field].get<std::string>());
        const auto& lab = j[spec.label_field];
        std::string token = lab.is_string() ? lab.get<std::string>() : nlohmann::to_string(lab);
        ds.labels.push_back(resolve_label(token, ds.class_names, line_no));
    }
    return ds;
}

}  // namespace

TextDataset load_dataset(const DatasetSpec& spec) {
    if (spec.class_names.size() < 2) throw ConfigError("dataset spec needs at least 2 class names");
    if (spec.format == "csv") return load_delimited(spec, ',');
    if (spec.format == "tsv") return load_delimited(spec, '\t');
    if (spec.format == "jsonl") return load_jsonl(spec);
    throw ConfigError("unknown dataset format '" + spec.format + "' (csv | tsv | jsonl)");
}

ByteBatch make_batch(const std::vector<std::string>& texts, const std::vector<int>& labels,
                     const std::vector<size_t>& order, size_t begin, size_t end, int64_t max_len,
                     BatchStats* stats) {
    if (max_len < 1) throw ConfigError("batchify: max_len must be >= 1");
    ByteBatch batch;
    batch.bsz = static_cast<int64_t>(end - begin);
    batch.len = max_len;
    batch.bytes.assign(static_cast<size_t>(batch.bsz * max_len), 0);
    batch.mask.assign(static_cast<size_t>(batch.bsz * max_len), 0);
    batch.labels.resize(static_cast<size_t>(batch.bsz));
    for (size_t r = begin; r < end; ++r) {
        const size_t src = order[r];
        const std::string& text = texts[src];
        const int64_t row = static_cast<int64_t>(r - begin);
        int64_t n = std::min<int64_t>(static_cast<int64_t>(text.size()), max_len);
        if (stats && static_cast<int64_t>(text.size()) > max_len) stats->truncated++;
        if (n == 0) {
            // empty text: keep one pad byte marked valid
            if (stats) stats->empty_texts++;
            batch.mask[static_cast<size_t>(row * max_len)] = 1;
        } else {
            std::memcpy(batch.bytes.data() + row * max_len, text.data(), static_cast<size_t>(n));
            std::fill_n(batch.mask.begin() + row * max_len, n, uint8_t{1});
        }
        batch.labels[static_cast<size_t>(row)] = labels[src];
    }
    return batch;
}

std::vector<ByteBatch> make_batches(const TextDataset& ds, int64_t max_len, int64_t batch_size,
                                    Prng* rng, BatchStats* stats) {
    std::vector<size_t> order(ds.texts.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (rng) rng->shuffle(order);
    std::vector<ByteBatch> out;
    for (size_t b = 0; b < order.size(); b += static_cast<size_t>(batch_size)) {
        size_t e = std::min(order.size(), b + static_cast<size_t>(batch_size));
        out.push_back(make_batch(ds.texts, ds.labels, order, b, e, max_len, stats));
    }
    return out;
}

}  // namespace kathleen
