//! Derivation traces.

use std::collections::HashMap;
use std::fmt;

use crate::cert::Tuple;
use crate::engine::liveness::Provenance;
use crate::engine::rules::{apply_rule, Rule};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    Input(Provenance),
    Rule(Rule),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub kind: StepKind,
    /// Zero-based indices of earlier steps.
    pub premises: Vec<usize>,
    pub conclusion: Tuple,
}

/// A sequence of steps, each an input or a rule applied to earlier steps.
/// The last step concludes the derived tuple.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Derivation {
    steps: Vec<Step>,
    seen: HashMap<Tuple, usize>,
}

impl Derivation {
    pub fn new() -> Self {
        Derivation::default()
    }

    /// Appends a step, or returns the existing step with the same conclusion.
    pub fn push(&mut self, kind: StepKind, premises: Vec<usize>, conclusion: Tuple) -> usize {
        if let Some(&i) = self.seen.get(&conclusion) {
            return i;
        }
        let i = self.steps.len();
        self.seen.insert(conclusion.clone(), i);
        self.steps.push(Step { kind, premises, conclusion });
        i
    }

    pub fn find(&self, t: &Tuple) -> Option<usize> {
        self.seen.get(t).copied()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn conclusion(&self) -> Option<&Tuple> {
        self.steps.last().map(|s| &s.conclusion)
    }

    /// Re-applies every rule step to its premises and checks that it
    /// reproduces the recorded conclusion.
    pub fn replay(&self) -> Result<(), String> {
        for (i, step) in self.steps.iter().enumerate() {
            let StepKind::Rule(rule) = step.kind else { continue };
            if step.premises.iter().any(|&p| p >= i) {
                return Err(format!("step {} refers forward", i + 1));
            }
            let premises: Vec<&Tuple> = step.premises.iter().map(|&p| &self.steps[p].conclusion).collect();
            let target = rule.needs_target().then_some(&step.conclusion);
            match apply_rule(rule, &premises, target) {
                Ok(Some(t)) if t == step.conclusion => {}
                other => return Err(format!("step {} ({rule}) does not replay: {other:?}", i + 1)),
            }
        }
        Ok(())
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, step) in self.steps.iter().enumerate() {
            let premises: Vec<String> = step.premises.iter().map(|p| (p + 1).to_string()).collect();
            let label = match &step.kind {
                StepKind::Input(_) => "INPUT".to_string(),
                StepKind::Rule(r) => r.to_string(),
            };
            writeln!(f, "{}: {} [{}] => {}", i + 1, label, premises.join(","), step.conclusion)?;
            match &step.kind {
                StepKind::Input(Provenance::Cert(c)) => writeln!(f, "   from {c}")?,
                StepKind::Input(Provenance::Pair(c, crl)) => {
                    writeln!(f, "   from {c}")?;
                    writeln!(f, "   live under {crl}")?;
                }
                _ => {}
            }
        }
        Ok(())
    }
}
