#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "xvars/model/labels.hpp"

namespace xvars::eval {

enum class ExtractionMethod { RuleBased, External };
std::string_view method_name(ExtractionMethod m);

/// Labels recovered from a free-text explanation. Absent fields mean no
/// evidence was found. Evidence strings are substrings of raw_text.
struct ExtractionResult {
    std::string raw_text;
    std::optional<Severity> severity;
    std::optional<FoulType> foul_type;
    ExtractionMethod method = ExtractionMethod::RuleBased;
    std::string matched_evidence;  // for severity
    std::string foul_evidence;
};

class LabelExtractor {
public:
    virtual ~LabelExtractor() = default;
    /// EmptyInput for empty or blank text.
    virtual ExtractionResult extract(std::string_view text) const = 0;
    virtual ExtractionMethod method() const = 0;
};

/// Ordered phrase table, first rule wins:
///   red card / sent off / serious foul play ...       -> Offence + Red card
///   yellow card / booking / caution / reckless ...    -> Offence + Yellow card
///   no card / no booking ...                          -> Offence + No card
///     (skipped when the text also says there was no foul)
///   no foul / not a foul / no offence / fair challenge -> No offence
/// Card phrases preceded by a negation in the same clause ("not a red card")
/// do not count. Foul types come from explicit action words only.
class RuleBasedExtractor final : public LabelExtractor {
public:
    ExtractionResult extract(std::string_view text) const override;
    ExtractionMethod method() const override { return ExtractionMethod::RuleBased; }
};

ExtractionResult extract_labels(std::string_view text);

/// One request, one response. Implementations throw Error(Transport) when
/// the backend cannot be reached.
class ExtractorClient {
public:
    virtual ~ExtractorClient() = default;
    virtual std::string complete(const std::string& request) const = 0;
};

/// Delegates to an ExtractorClient, one request per field. Requests are
///   field: severity|foul_type
///   text: <explanation on one line>
/// and the response must be exactly one line "label: <canonical name>" or
/// "label: none"; anything else is a DecodeFailure.
class ExternalExtractor final : public LabelExtractor {
public:
    explicit ExternalExtractor(std::shared_ptr<const ExtractorClient> client);
    ExtractionResult extract(std::string_view text) const override;
    ExtractionMethod method() const override { return ExtractionMethod::External; }

private:
    std::shared_ptr<const ExtractorClient> client_;
};

std::string external_request(std::string_view field, std::string_view text);
/// The canonical name from a response, or nullopt for "none".
std::optional<std::string> parse_external_response(std::string_view response);

}  // namespace xvars::eval
