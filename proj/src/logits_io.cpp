#include "scod/logits_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace scod {

const char* origin_tag(RecordOrigin origin) {
    switch (origin) {
        case RecordOrigin::kInlier: return "in";
        case RecordOrigin::kOutlier: return "out";
        case RecordOrigin::kWild: return "wild";
        case RecordOrigin::kStrictInlier: return "strict_in";
    }
    throw std::logic_error("unreachable origin");
}

RecordOrigin parse_origin_tag(const std::string& tag) {
    if (tag == "in") return RecordOrigin::kInlier;
    if (tag == "out") return RecordOrigin::kOutlier;
    if (tag == "wild") return RecordOrigin::kWild;
    if (tag == "strict_in") return RecordOrigin::kStrictInlier;
    throw std::invalid_argument("unknown origin tag '" + tag + "'");
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_value(const std::string& field, int line_no) {
    if (field == "inf") return kInf;
    if (field == "-inf") return -kInf;
    if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw LogitsFormatError("bad numeric field '" + field + "'", line_no);
    return v;
}

int parse_int(const std::string& field, int line_no) {
    int v = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw LogitsFormatError("bad integer field '" + field + "'", line_no);
    return v;
}

}  // namespace

LogitsFile read_logits(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw LogitsFormatError("empty file", 1);

    LogitsFile file;
    {
        std::istringstream hdr(line);
        std::string magic, version, l_field, e_field;
        hdr >> magic >> version >> l_field >> e_field;
        if (magic != "scod-logits" || version != "v1" ||
            l_field.rfind("L=", 0) != 0 || e_field.rfind("E=", 0) != 0)
            throw LogitsFormatError(
                "expected header 'scod-logits v1 L=<n> E=<m>'", 1);
        file.num_classes = parse_int(l_field.substr(2), 1);
        file.embedding_dim = parse_int(e_field.substr(2), 1);
        if (file.num_classes < 2)
            throw LogitsFormatError("L must be >= 2", 1);
        if (file.embedding_dim < 0)
            throw LogitsFormatError("E must be >= 0", 1);
    }

    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        const size_t expected = 2 + static_cast<size_t>(file.num_classes) + 1 +
                                static_cast<size_t>(file.embedding_dim);
        if (fields.size() != expected)
            throw LogitsFormatError("expected " + std::to_string(expected) +
                                        " fields, found " +
                                        std::to_string(fields.size()),
                                    line_no);

        LogitsRecord rec;
        try {
            rec.origin = parse_origin_tag(fields[0]);
        } catch (const std::invalid_argument& e) {
            throw LogitsFormatError(e.what(), line_no);
        }
        if (fields[1] != "-") {
            const int label = parse_int(fields[1], line_no);
            if (label < 0 || label >= file.num_classes)
                throw LogitsFormatError("label out of range", line_no);
            rec.label = label;
        }
        size_t pos = 2;
        rec.logits.reserve(file.num_classes);
        for (int i = 0; i < file.num_classes; ++i)
            rec.logits.push_back(parse_value(fields[pos++], line_no));
        if (fields[pos] != "-") rec.ood_logit = parse_value(fields[pos], line_no);
        ++pos;
        rec.embedding.reserve(file.embedding_dim);
        for (int i = 0; i < file.embedding_dim; ++i)
            rec.embedding.push_back(parse_value(fields[pos++], line_no));
        file.records.push_back(std::move(rec));
    }
    if (file.records.empty()) throw LogitsFormatError("no records", line_no + 1);
    return file;
}

LogitsFile read_logits_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open logits file: " + path);
    return read_logits(is);
}

void write_logits(std::ostream& os, const LogitsFile& file) {
    os << "scod-logits v1 L=" << file.num_classes << " E=" << file.embedding_dim
       << '\n';
    for (const auto& rec : file.records) {
        if (static_cast<int>(rec.logits.size()) != file.num_classes ||
            static_cast<int>(rec.embedding.size()) != file.embedding_dim)
            throw std::invalid_argument("record dimensions disagree with header");
        os << origin_tag(rec.origin) << ',';
        if (rec.label)
            os << *rec.label;
        else
            os << '-';
        for (double v : rec.logits) os << ',' << format_double(v);
        os << ',';
        if (rec.ood_logit)
            os << format_double(*rec.ood_logit);
        else
            os << '-';
        for (double v : rec.embedding) os << ',' << format_double(v);
        os << '\n';
    }
}

void write_logits_file(const std::string& path, const LogitsFile& file) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_logits(os, file);
}

}  // namespace scod
