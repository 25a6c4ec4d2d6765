//! Question templates and coverage measurement.
//!
//! A template is a two-variable query pattern plus a roster: one variable
//! ranges over the instances of a collection (producing one question per
//! instance), the other is the open answer slot. Coverage of a knowledge
//! base is the number of expanded questions the reasoner can answer, and the
//! reward of an acquisition step is the increase in that number.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::kbstore::KnowledgeBase;
use crate::reasoner::{answered, backchain, Atom, HornClause, InferenceLimits, Term};
use crate::symbol::Symbol;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct QuestionTemplate {
    pub name: Symbol,
    /// Query pattern containing exactly two distinct variables.
    pub pattern: Atom,
    /// The variable instantiated from `param_collection`.
    pub param_var: Symbol,
    /// The variable left open for the reasoner to fill.
    pub answer_var: Symbol,
    pub param_collection: Symbol,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QaError {
    #[error("coverage measurements cover different question sets")]
    QuestionSetMismatch,
}

/// One ground-parameter question per instance of the template's collection,
/// in sorted instance order.
pub fn expand_template(kb: &KnowledgeBase, template: &QuestionTemplate) -> Vec<Atom> {
    let instances = kb.instances_of(&template.param_collection);
    instances
        .iter()
        .map(|entity| Atom {
            predicate: template.pattern.predicate.clone(),
            args: template
                .pattern
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) if *v == template.param_var => Term::Const(entity.clone()),
                    other => other.clone(),
                })
                .collect(),
        })
        .collect()
}

/// Coverage of one question set: every expanded question and whether the
/// reasoner answered it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QaResult {
    pub asked: u64,
    pub answered: u64,
    pub per_question: BTreeMap<Atom, bool>,
}

/// Expands every template against `kb` and probes each question for at least
/// one answer.
pub fn evaluate(
    kb: &KnowledgeBase,
    axioms: &[HornClause],
    templates: &[QuestionTemplate],
    limits: &InferenceLimits,
) -> QaResult {
    let mut result = QaResult::default();
    for template in templates {
        for question in expand_template(kb, template) {
            let ok = answered(kb, axioms, &question, limits);
            result.asked += 1;
            if ok {
                result.answered += 1;
            }
            result.per_question.insert(question, ok);
        }
    }
    result
}

/// Per-template breakdown with the full answer sets, for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateReport {
    pub name: Symbol,
    pub asked: u64,
    pub answered: u64,
    /// Answered question → values found for the answer variable.
    pub bindings: BTreeMap<Atom, BTreeSet<Symbol>>,
}

pub fn detailed_report(
    kb: &KnowledgeBase,
    axioms: &[HornClause],
    templates: &[QuestionTemplate],
    limits: &InferenceLimits,
) -> Vec<TemplateReport> {
    templates
        .iter()
        .map(|template| {
            let mut report = TemplateReport {
                name: template.name.clone(),
                asked: 0,
                answered: 0,
                bindings: BTreeMap::new(),
            };
            for question in expand_template(kb, template) {
                report.asked += 1;
                let result = backchain(kb, axioms, &question, limits);
                let values: BTreeSet<Symbol> = result
                    .answers
                    .iter()
                    .filter_map(|a| a.get(&template.answer_var).cloned())
                    .collect();
                if !values.is_empty() {
                    report.answered += 1;
                    report.bindings.insert(question, values);
                }
            }
            report
        })
        .collect()
}

/// Answer gain between two coverage measurements of the same question set,
/// clamped at zero.
pub fn reward(before: &QaResult, after: &QaResult) -> Result<u64, QaError> {
    if before.per_question.len() != after.per_question.len()
        || !before.per_question.keys().eq(after.per_question.keys())
    {
        return Err(QaError::QuestionSetMismatch);
    }
    Ok(after.answered.saturating_sub(before.answered))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kbstore::Fact;

    fn demo_world() -> (KnowledgeBase, Vec<HornClause>, Vec<QuestionTemplate>) {
        let text = "\
(isa P1 Person)\n(isa P2 Person)\n(isa P3 Person)\n(isa P4 Person)\n\
(isa P5 Person)\n(isa P6 Person)\n(isa P7 Person)\n(isa P8 Person)\n(isa P9 Person)\n\
(bornIn P1 Springfield)\n(cityInRegion Springfield Illinois)\n\
(<= (bornInRegion ?p ?r) (bornIn ?p ?c) (cityInRegion ?c ?r))\n\
(template whereBorn (bornInRegion ?p ?r) Person ?r)\n";
        let corpus = crate::Corpus::from_sources([text]).unwrap();
        (corpus.kb, corpus.axioms, corpus.templates)
    }

    #[test]
    fn expansion_yields_one_question_per_instance() {
        let (kb, _, templates) = demo_world();
        let questions = expand_template(&kb, &templates[0]);
        assert_eq!(questions.len(), 9);
        assert_eq!(questions[0].to_string(), "(bornInRegion P1 ?r)");
        assert!(questions.iter().all(|q| q.variables() == vec![Symbol::new("r")]));
        // instances come out sorted
        let params: Vec<String> = questions.iter().map(|q| q.args[0].to_string()).collect();
        let mut sorted = params.clone();
        sorted.sort();
        assert_eq!(params, sorted);
    }

    #[test]
    fn evaluation_counts_answerable_questions() {
        let (kb, axioms, templates) = demo_world();
        let result = evaluate(&kb, &axioms, &templates, &InferenceLimits::default());
        assert_eq!(result.asked, 9);
        assert_eq!(result.answered, 1);
        assert_eq!(result.per_question.len(), 9);
        let key = Atom::new(
            "bornInRegion",
            vec![Term::Const(Symbol::new("P1")), Term::Var(Symbol::new("r"))],
        );
        assert_eq!(result.per_question.get(&key), Some(&true));
        assert_eq!(result.per_question.values().filter(|v| **v).count(), 1);
    }

    #[test]
    fn reward_is_the_clamped_answer_gain() {
        let (kb, axioms, templates) = demo_world();
        let limits = InferenceLimits::default();
        let before = evaluate(&kb, &axioms, &templates, &limits);

        let mut grown = kb.clone();
        grown.assert_fact(Fact::binary("bornIn", "P2", "Springfield")).unwrap();
        grown.assert_fact(Fact::binary("bornIn", "P3", "Springfield")).unwrap();
        let after = evaluate(&grown, &axioms, &templates, &limits);
        assert_eq!(reward(&before, &after), Ok(2));
        // shrinkage clamps to zero rather than going negative
        assert_eq!(reward(&after, &before), Ok(0));
    }

    #[test]
    fn reward_rejects_mismatched_question_sets() {
        let (kb, axioms, templates) = demo_world();
        let limits = InferenceLimits::default();
        let before = evaluate(&kb, &axioms, &templates, &limits);
        let mut other = kb.clone();
        other.assert_fact(Fact::binary("isa", "P10", "Person")).unwrap();
        let after = evaluate(&other, &axioms, &templates, &limits);
        assert_eq!(reward(&before, &after), Err(QaError::QuestionSetMismatch));
    }

    #[test]
    fn detailed_report_exposes_answer_bindings() {
        let (kb, axioms, templates) = demo_world();
        let reports = detailed_report(&kb, &axioms, &templates, &InferenceLimits::default());
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].name, Symbol::new("whereBorn"));
        assert_eq!(reports[0].asked, 9);
        assert_eq!(reports[0].answered, 1);
        let (question, values) = reports[0].bindings.iter().next().unwrap();
        assert_eq!(question.to_string(), "(bornInRegion P1 ?r)");
        assert_eq!(values.iter().collect::<Vec<_>>(), vec![&Symbol::new("Illinois")]);
    }

    #[test]
    fn empty_collection_asks_nothing() {
        let kb = KnowledgeBase::new();
        let template = QuestionTemplate {
            name: Symbol::new("t"),
            pattern: Atom::new(
                "p",
                vec![Term::Var(Symbol::new("a")), Term::Var(Symbol::new("b"))],
            ),
            param_var: Symbol::new("a"),
            answer_var: Symbol::new("b"),
            param_collection: Symbol::new("Ghost"),
        };
        assert!(expand_template(&kb, &template).is_empty());
    }
}
