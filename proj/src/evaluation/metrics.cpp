#include "xvars/evaluation/metrics.hpp"

#include <cstdio>

#include "xvars/common/error.hpp"
#include "xvars/model/labels.hpp"

namespace xvars::eval {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : names_(std::move(class_names)), counts_(names_.size() * names_.size(), 0) {
    require(!names_.empty(), ErrorCode::InvalidArgument, "confusion matrix needs at least one class");
}

ConfusionMatrix ConfusionMatrix::for_foul_types() {
    return ConfusionMatrix({kFoulTypeNames.begin(), kFoulTypeNames.end()});
}

ConfusionMatrix ConfusionMatrix::for_severities() {
    return ConfusionMatrix({kSeverityNames.begin(), kSeverityNames.end()});
}

void ConfusionMatrix::add(int gt, int predicted, long long count) {
    if (gt < 0 || gt >= size() || predicted < 0 || predicted >= size()) {
        fail(ErrorCode::OutOfBounds, "confusion cell (" + std::to_string(gt) + ", " + std::to_string(predicted) +
                                         ") outside " + std::to_string(size()) + " classes");
    }
    require(count >= 0, ErrorCode::InvalidArgument, "confusion counts must be non-negative");
    counts_[static_cast<std::size_t>(gt * size() + predicted)] += count;
}

long long ConfusionMatrix::at(int gt, int predicted) const {
    if (gt < 0 || gt >= size() || predicted < 0 || predicted >= size()) {
        fail(ErrorCode::OutOfBounds, "confusion cell outside the matrix");
    }
    return counts_[static_cast<std::size_t>(gt * size() + predicted)];
}

long long ConfusionMatrix::row_total(int gt) const {
    long long s = 0;
    for (int p = 0; p < size(); ++p) s += at(gt, p);
    return s;
}

long long ConfusionMatrix::total() const {
    long long s = 0;
    for (const auto c : counts_) s += c;
    return s;
}

long long ConfusionMatrix::trace() const {
    long long s = 0;
    for (int k = 0; k < size(); ++k) s += at(k, k);
    return s;
}

double accuracy(const ConfusionMatrix& cm) {
    const auto n = cm.total();
    if (n == 0) {
        fail(ErrorCode::EmptyInput, "accuracy of an empty confusion matrix");
    }
    return static_cast<double>(cm.trace()) / static_cast<double>(n);
}

double balanced_accuracy(const ConfusionMatrix& cm) {
    double sum = 0;
    int classes = 0;
    for (int k = 0; k < cm.size(); ++k) {
        const auto row = cm.row_total(k);
        if (row == 0) continue;
        sum += static_cast<double>(cm.at(k, k)) / static_cast<double>(row);
        ++classes;
    }
    if (classes == 0) {
        fail(ErrorCode::EmptyInput, "balanced accuracy with no ground-truth samples");
    }
    return sum / classes;
}

std::string_view task_name(Task task) { return task == Task::FoulType ? "foul_type" : "severity"; }

void finalize(MetricsReport& report) {
    report.accuracy.reset();
    report.balanced_accuracy.reset();
    if (report.confusion.total() == 0) return;
    report.accuracy = accuracy(report.confusion);
    report.balanced_accuracy = balanced_accuracy(report.confusion);
}

std::string format_metric(std::optional<double> value) {
    if (!value) return "/";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *value);
    return buf;
}

}  // namespace xvars::eval
