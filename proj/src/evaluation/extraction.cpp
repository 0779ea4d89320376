#include "xvars/evaluation/extraction.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <vector>

#include "xvars/common/error.hpp"

namespace xvars::eval {
namespace {

struct Rule {
    std::vector<std::string_view> phrases;
    bool negatable;
};

const std::array<std::pair<Severity, Rule>, 4> kSeverityRules = {{
    {Severity::OffenceRedCard,
     {{"red card", "straight red", "sent off", "sending off", "sending-off", "send him off", "serious foul play",
       "violent conduct", "excessive force"},
      true}},
    {Severity::OffenceYellowCard,
     {{"yellow card", "booking", "booked", "book him", "caution", "cautioned", "reckless", "unsporting behaviour"},
      true}},
    {Severity::OffenceNoCard, {{"no card", "without a card", "no booking", "no caution", "no yellow"}, false}},
    {Severity::NoOffence,
     {{"no foul", "not a foul", "no offence", "not an offence", "not a penalty", "no infringement", "fair challenge",
       "fair tackle", "clean tackle", "legal challenge"},
      false}},
}};

// Standing tackle before tackle, high leg before the generic words.
const std::array<std::pair<FoulType, Rule>, 8> kFoulRules = {{
    {FoulType::StandingTackling, {{"standing tackle", "standing tackling"}, true}},
    {FoulType::HighLeg, {{"high leg", "high foot", "leg high", "raised his leg"}, true}},
    {FoulType::Elbowing, {{"elbow", "elbowed", "elbowing", "elbows"}, true}},
    {FoulType::Holding,
     {{"held", "holding", "holds", "hold", "grabbed", "shirt pull", "pulled the shirt", "pulling the shirt"}, true}},
    {FoulType::Pushing, {{"push", "pushed", "pushing", "pushes", "shove", "shoved"}, true}},
    {FoulType::Dive, {{"dive", "dived", "diving", "simulation", "simulated"}, true}},
    {FoulType::Tackling, {{"tackle", "tackled", "tackling", "slide tackle", "sliding tackle"}, true}},
    {FoulType::Challenge, {{"challenge", "challenged", "shoulder charge", "charged"}, true}},
}};

const std::array<std::string_view, 8> kNegations = {"no", "not", "without", "never", "isn't", "wasn't", "nor", "neither"};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '\'' || c == '-'; }

std::string lowered(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// True when one of the three words before `pos`, inside the same clause, is a negation.
bool negated(const std::string& lower, std::size_t pos) {
    std::size_t i = pos;
    for (int words = 0; words < 3; ++words) {
        while (i > 0 && lower[i - 1] == ' ') --i;
        if (i == 0) return false;
        const char c = lower[i - 1];
        if (!is_word_char(c)) return false;  // clause boundary
        const std::size_t end = i;
        while (i > 0 && is_word_char(lower[i - 1])) --i;
        const std::string_view word(lower.data() + i, end - i);
        if (std::find(kNegations.begin(), kNegations.end(), word) != kNegations.end()) return true;
    }
    return false;
}

// Earliest whole-word occurrence of `phrase` that is not negated (when negatable).
std::optional<std::size_t> find_phrase(const std::string& lower, std::string_view phrase, bool negatable) {
    std::size_t from = 0;
    while (true) {
        const auto pos = lower.find(phrase, from);
        if (pos == std::string::npos) return std::nullopt;
        const auto end = pos + phrase.size();
        const bool start_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(lower[pos - 1]));
        const bool end_ok = end == lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end]));
        if (start_ok && end_ok && !(negatable && negated(lower, pos))) return pos;
        from = pos + 1;
    }
}

struct Match {
    std::size_t pos;
    std::size_t len;
};

std::optional<Match> first_match(const std::string& lower, const Rule& rule) {
    std::optional<Match> best;
    for (const auto phrase : rule.phrases) {
        const auto pos = find_phrase(lower, phrase, rule.negatable);
        if (pos && (!best || *pos < best->pos)) best = Match{*pos, phrase.size()};
    }
    return best;
}

bool blank(std::string_view text) {
    return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::string_view method_name(ExtractionMethod m) { return m == ExtractionMethod::RuleBased ? "rule_based" : "external"; }

ExtractionResult RuleBasedExtractor::extract(std::string_view text) const {
    if (blank(text)) {
        fail(ErrorCode::EmptyInput, "cannot extract labels from empty text");
    }
    ExtractionResult r;
    r.raw_text = std::string(text);
    r.method = ExtractionMethod::RuleBased;
    const auto lower = lowered(text);
    const bool denies_foul = first_match(lower, kSeverityRules[3].second).has_value();
    for (const auto& [severity, rule] : kSeverityRules) {
        if (severity == Severity::OffenceNoCard && denies_foul) continue;
        if (const auto m = first_match(lower, rule)) {
            r.severity = severity;
            r.matched_evidence = r.raw_text.substr(m->pos, m->len);
            break;
        }
    }
    for (const auto& [foul, rule] : kFoulRules) {
        if (const auto m = first_match(lower, rule)) {
            r.foul_type = foul;
            r.foul_evidence = r.raw_text.substr(m->pos, m->len);
            break;
        }
    }
    return r;
}

ExtractionResult extract_labels(std::string_view text) { return RuleBasedExtractor().extract(text); }

ExternalExtractor::ExternalExtractor(std::shared_ptr<const ExtractorClient> client) : client_(std::move(client)) {
    require(client_ != nullptr, ErrorCode::InvalidArgument, "external extractor needs a client");
}

std::string external_request(std::string_view field, std::string_view text) {
    std::string flat(text);
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    std::replace(flat.begin(), flat.end(), '\r', ' ');
    return "field: " + std::string(field) + "\ntext: " + flat + "\n";
}

std::optional<std::string> parse_external_response(std::string_view response) {
    std::string line(response);
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    constexpr std::string_view prefix = "label: ";
    if (line.find('\n') != std::string::npos || line.rfind(prefix, 0) != 0 || line.size() == prefix.size()) {
        fail(ErrorCode::DecodeFailure, "extractor response does not match 'label: <canonical name>': '" +
                                           std::string(response) + "'");
    }
    auto value = line.substr(prefix.size());
    if (value == "none") return std::nullopt;
    return value;
}

ExtractionResult ExternalExtractor::extract(std::string_view text) const {
    if (blank(text)) {
        fail(ErrorCode::EmptyInput, "cannot extract labels from empty text");
    }
    ExtractionResult r;
    r.raw_text = std::string(text);
    r.method = ExtractionMethod::External;
    if (const auto sev = parse_external_response(client_->complete(external_request("severity", text)))) {
        r.severity = parse_severity(*sev);
        if (!r.severity) fail(ErrorCode::DecodeFailure, "extractor returned unknown severity '" + *sev + "'");
        r.matched_evidence = r.raw_text;  // the backend does not point at a span
    }
    if (const auto foul = parse_external_response(client_->complete(external_request("foul_type", text)))) {
        r.foul_type = parse_foul_type(*foul);
        if (!r.foul_type) fail(ErrorCode::DecodeFailure, "extractor returned unknown foul type '" + *foul + "'");
        r.foul_evidence = r.raw_text;
    }
    return r;
}

}  // namespace xvars::eval
