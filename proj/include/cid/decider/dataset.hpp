#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cid::decider {

/// Incorrect is the positive (detection) class.
enum class Label { Correct, Incorrect };

std::string_view label_name(Label l) noexcept;  // "correct" / "incorrect"
Label parse_label(std::string_view s);          // case-insensitive

struct LabeledExample {
    std::vector<double> features;
    Label label = Label::Correct;
    std::string explanation_ref;

    bool operator==(const LabeledExample&) const = default;
};

struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<LabeledExample> examples;

    std::size_t dim() const noexcept { return feature_names.size(); }
    std::size_t size() const noexcept { return examples.size(); }
    std::size_t count(Label l) const noexcept;
    /// Keeps the given columns, in the given order.
    Dataset select(const std::vector<std::size_t>& columns) const;
    /// Throws PreconditionError if a row's width differs from dim() or a value is not finite.
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

/// Header: feature names..., label, explanation_ref. Values use 17
/// significant digits so they parse back bit-exactly.
std::string to_csv(const Dataset& d);
Dataset parse_csv(const std::string& content, const std::string& origin);
void write_csv(const std::filesystem::path& path, const Dataset& d);
Dataset read_csv(const std::filesystem::path& path);

}  // namespace cid::decider
