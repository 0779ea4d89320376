#include "xvars/evaluation/evaluate.hpp"

#include "xvars/common/error.hpp"
#include "xvars/dataset/sampling.hpp"

namespace xvars::eval {
namespace {

const data::ClipRecord& labeled(const data::ClipRecord& clip) {
    if (!clip.gt_foul || !clip.gt_severity) {
        fail(ErrorCode::MissingLabel, "evaluation: clip '" + clip.clip_id + "' has no ground-truth labels");
    }
    return clip;
}

}  // namespace

ClassifierEvaluation score_classifier(std::vector<ClassifierOutcome> outcomes) {
    ClassifierEvaluation ev;
    ev.foul.task = Task::FoulType;
    ev.foul.confusion = ConfusionMatrix::for_foul_types();
    ev.severity.task = Task::Severity;
    ev.severity.confusion = ConfusionMatrix::for_severities();
    for (const auto& o : outcomes) {
        ++ev.foul.n_attempted;
        ++ev.severity.n_attempted;
        if (!o.error.empty() || !o.predicted_foul || !o.predicted_severity) {
            ++ev.foul.n_inference_errors;
            ++ev.severity.n_inference_errors;
            continue;
        }
        ev.foul.confusion.add(index_of(o.gt_foul), index_of(*o.predicted_foul));
        ev.severity.confusion.add(index_of(o.gt_severity), index_of(*o.predicted_severity));
        ++ev.foul.n_evaluated;
        ++ev.severity.n_evaluated;
    }
    finalize(ev.foul);
    finalize(ev.severity);
    ev.outcomes = std::move(outcomes);
    return ev;
}

ClassifierEvaluation evaluate_classifier(const XVarsModel& model, const data::Dataset& dataset, data::Split split,
                                         int frames_per_clip, const data::MediaReader& reader) {
    std::vector<ClassifierOutcome> outcomes;
    for (const auto* c : dataset.clips_in(split)) {
        const auto& clip = labeled(*c);
        ClassifierOutcome o{clip.clip_id, *clip.gt_foul, *clip.gt_severity, std::nullopt, std::nullopt, {}};
        try {
            const auto bundle = model.classify_clip(data::sample_frames(dataset, clip, frames_per_clip, reader));
            o.predicted_foul = bundle.predicted_foul;
            o.predicted_severity = bundle.predicted_severity;
        } catch (const Error& e) {
            o.error = e.what();
        }
        outcomes.push_back(std::move(o));
    }
    return score_classifier(std::move(outcomes));
}

GenerativeEvaluation score_generative(std::vector<GenerationOutcome> outcomes) {
    GenerativeEvaluation ev;
    auto& r = ev.severity;
    r.task = Task::Severity;
    r.confusion = ConfusionMatrix::for_severities();
    for (const auto& o : outcomes) {
        ++r.n_attempted;
        if (!o.extraction) {
            ++r.n_inference_errors;
            continue;
        }
        if (o.extraction->foul_type) ++ev.foul_type_extracted;
        if (!o.extraction->severity) {
            ++r.n_extraction_failures;
            continue;
        }
        r.confusion.add(index_of(o.gt_severity), index_of(*o.extraction->severity));
        ++r.n_evaluated;
    }
    finalize(r);
    ev.foul_type_coverage =
        r.n_attempted ? static_cast<double>(ev.foul_type_extracted) / static_cast<double>(r.n_attempted) : 0.0;
    ev.outcomes = std::move(outcomes);
    return ev;
}

GenerativeEvaluation evaluate_generative(const XVarsModel& model, const data::Dataset& dataset, data::Split split,
                                         std::string_view question, int frames_per_clip,
                                         const LabelExtractor& extractor, const InferenceOptions& options,
                                         const data::MediaReader& reader) {
    std::vector<GenerationOutcome> outcomes;
    for (const auto* c : dataset.clips_in(split)) {
        const auto& clip = labeled(*c);
        GenerationOutcome o;
        o.clip_id = clip.clip_id;
        o.gt_severity = *clip.gt_severity;
        o.gt_foul = clip.gt_foul;
        try {
            const auto prepared = model.prepare(data::sample_frames(dataset, clip, frames_per_clip, reader));
            o.answer = model.answer(prepared, question, options, [&](const PromptSequence&, FoulType f, Severity s) {
                o.injected_foul = f;
                o.injected_severity = s;
            });
        } catch (const Error& e) {
            o.error = e.what();
            outcomes.push_back(std::move(o));
            continue;
        }
        if (o.answer.empty()) {
            // Nothing to read labels from; an extraction failure, not an error.
            ExtractionResult empty;
            empty.method = extractor.method();
            o.extraction = empty;
        } else {
            try {
                o.extraction = extractor.extract(o.answer);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::Transport) throw;
                o.error = e.what();
            }
        }
        outcomes.push_back(std::move(o));
    }
    return score_generative(std::move(outcomes));
}

}  // namespace xvars::eval
