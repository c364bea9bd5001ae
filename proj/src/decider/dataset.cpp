#include "cid/decider/dataset.hpp"

#include "cid/error.hpp"
#include "cid/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cid::decider {

namespace {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto trimmed = text::trim(s);
    const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
    if (ec != std::errc{} || ptr != trimmed.data() + trimmed.size() || !std::isfinite(v)) {
        throw SchemaError(where, "not a finite number: '" + s + "'");
    }
    return v;
}

}  // namespace

std::string_view label_name(Label l) noexcept { return l == Label::Correct ? "correct" : "incorrect"; }

Label parse_label(std::string_view s) {
    const auto lower = text::to_lower_ascii(text::trim(s));
    if (lower == "correct") return Label::Correct;
    if (lower == "incorrect") return Label::Incorrect;
    throw PreconditionError("label must be correct or incorrect, got '" + std::string(s) + "'");
}

std::size_t Dataset::count(Label l) const noexcept {
    std::size_t n = 0;
    for (const auto& e : examples) n += e.label == l ? 1 : 0;
    return n;
}

Dataset Dataset::select(const std::vector<std::size_t>& columns) const {
    Dataset out;
    for (auto c : columns) {
        if (c >= dim()) throw PreconditionError("column " + std::to_string(c) + " out of range");
        out.feature_names.push_back(feature_names[c]);
    }
    out.examples.reserve(examples.size());
    for (const auto& e : examples) {
        LabeledExample row{{}, e.label, e.explanation_ref};
        row.features.reserve(columns.size());
        for (auto c : columns) row.features.push_back(e.features[c]);
        out.examples.push_back(std::move(row));
    }
    return out;
}

void Dataset::validate() const {
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (examples[i].features.size() != dim()) {
            throw PreconditionError("row " + std::to_string(i) + " has " +
                                    std::to_string(examples[i].features.size()) + " features, expected " +
                                    std::to_string(dim()));
        }
        for (double v : examples[i].features) {
            if (!std::isfinite(v)) throw PreconditionError("row " + std::to_string(i) + " has a non-finite value");
        }
    }
}

std::string to_csv(const Dataset& d) {
    d.validate();
    std::string out;
    for (const auto& n : d.feature_names) {
        out += csv_field(n);
        out.push_back(',');
    }
    out += "label,explanation_ref\n";
    for (const auto& e : d.examples) {
        for (double v : e.features) {
            out += format_double(v);
            out.push_back(',');
        }
        out += label_name(e.label);
        out.push_back(',');
        out += csv_field(e.explanation_ref);
        out.push_back('\n');
    }
    return out;
}

Dataset parse_csv(const std::string& content, const std::string& origin) {
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(origin, "empty features file");
    const auto header = text::split_csv_line(line);
    if (header.size() < 3 || header[header.size() - 2] != "label" || header.back() != "explanation_ref") {
        throw SchemaError(origin, "header must end with label,explanation_ref");
    }
    Dataset d;
    d.feature_names.assign(header.begin(), header.end() - 2);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        const auto fields = text::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw SchemaError(where, "expected " + std::to_string(header.size()) + " fields, got " +
                                         std::to_string(fields.size()));
        }
        LabeledExample e;
        for (std::size_t i = 0; i < d.dim(); ++i) e.features.push_back(parse_double(fields[i], where));
        try {
            e.label = parse_label(fields[d.dim()]);
        } catch (const PreconditionError& err) {
            throw SchemaError(where, err.what());
        }
        e.explanation_ref = fields.back();
        d.examples.push_back(std::move(e));
    }
    return d;
}

void write_csv(const std::filesystem::path& path, const Dataset& d) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + path.string());
    out << to_csv(d);
}

Dataset read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path.string());
}

}  // namespace cid::decider
