#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "imblab/common.hpp"

namespace imblab {

/// Dense row-major feature matrix with binary labels.
///
/// Construction validates shape, label domain and finiteness; the members
/// are read-only afterwards so every Dataset in flight is valid.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::size_t rows, std::size_t cols, std::vector<double> values,
            std::vector<std::uint8_t> labels)
        : rows_(rows), cols_(cols), values_(std::move(values)), labels_(std::move(labels)) {
        if (rows_ == 0 || cols_ == 0) {
            throw InvalidArgument("dataset must have at least one row and one column");
        }
        if (values_.size() != rows_ * cols_) {
            throw InvalidArgument("feature buffer size does not match rows x cols");
        }
        if (labels_.size() != rows_) {
            throw InvalidArgument("label count does not match row count");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                throw InvalidArgument("non-finite feature value at row " +
                                      std::to_string(i / cols_) + ", column " +
                                      std::to_string(i % cols_));
            }
        }
        for (std::size_t i = 0; i < rows_; ++i) {
            if (labels_[i] > 1) {
                throw InvalidArgument("label at row " + std::to_string(i) + " is not 0/1");
            }
        }
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * cols_, cols_};
    }
    double at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
    int label(std::size_t i) const { return labels_[i]; }

    const std::vector<double>& values() const { return values_; }
    const std::vector<std::uint8_t>& labels() const { return labels_; }

    std::size_t positives() const {
        std::size_t n = 0;
        for (auto y : labels_) {
            n += y;
        }
        return n;
    }
    std::size_t negatives() const { return rows_ - positives(); }

    /// Rows selected by index, in the given order (duplicates allowed).
    Dataset select(std::span<const std::size_t> idx) const {
        std::vector<double> v;
        v.reserve(idx.size() * cols_);
        std::vector<std::uint8_t> y;
        y.reserve(idx.size());
        for (auto i : idx) {
            auto r = row(i);
            v.insert(v.end(), r.begin(), r.end());
            y.push_back(labels_[i]);
        }
        return Dataset(idx.size(), cols_, std::move(v), std::move(y));
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
    std::vector<std::uint8_t> labels_;
};

/// Logistic link parameters: Pr[y = 1 | x] = sigmoid(omega . x + omega0).
struct LogisticParams {
    std::vector<double> omega;
    double omega0 = 0.0;

    std::size_t dim() const { return omega.size(); }

    double logit(std::span<const double> x) const {
        double z = omega0;
        for (std::size_t j = 0; j < omega.size(); ++j) {
            z += omega[j] * x[j];
        }
        return z;
    }
};

using LogisticGroundTruth = LogisticParams;

} // namespace imblab
