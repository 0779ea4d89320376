#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xvars::eval {

/// K x K counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::vector<std::string> class_names);
    static ConfusionMatrix for_foul_types();
    static ConfusionMatrix for_severities();

    /// OutOfBounds for class indices outside [0, K); InvalidArgument for negative counts.
    void add(int gt, int predicted, long long count = 1);

    int size() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& class_names() const { return names_; }
    long long at(int gt, int predicted) const;
    long long row_total(int gt) const;
    long long total() const;
    long long trace() const;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::vector<std::string> names_;
    std::vector<long long> counts_;  // row-major
};

/// trace / total. EmptyInput when the matrix holds no samples.
double accuracy(const ConfusionMatrix& cm);

/// Mean per-class recall over the classes that have at least one
/// ground-truth sample; classes with an empty row are left out.
/// EmptyInput when every row is empty.
double balanced_accuracy(const ConfusionMatrix& cm);

enum class Task { FoulType, Severity };
std::string_view task_name(Task task);

/// n_evaluated + n_extraction_failures + n_inference_errors == n_attempted.
/// accuracy and balanced_accuracy are empty when nothing could be scored.
struct MetricsReport {
    Task task = Task::Severity;
    std::optional<double> accuracy;
    std::optional<double> balanced_accuracy;
    ConfusionMatrix confusion = ConfusionMatrix::for_severities();
    long long n_attempted = 0;
    long long n_evaluated = 0;
    long long n_extraction_failures = 0;
    long long n_inference_errors = 0;
};

/// Fills accuracy fields from the confusion matrix (left empty when it is empty).
void finalize(MetricsReport& report);

/// Two decimals, or "/" when absent.
std::string format_metric(std::optional<double> value);

}  // namespace xvars::eval
