//! Interactive token game over a net.

use thiserror::Error;

use crate::expr::Binding;
use crate::petri::{enabled, fire, Marking, PrTNet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("bad-choice: {choice} is not in 0..{available}")]
    BadChoice { choice: usize, available: usize },
    #[error("nothing to undo")]
    EmptyHistory,
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::BadChoice { .. } => "bad-choice",
            SimError::EmptyHistory => "empty-history",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Index(usize),
    Undo,
    Reset,
}

#[derive(Debug, Clone)]
pub struct SimSession {
    net: PrTNet,
    current: Marking,
    history: Vec<(String, Binding)>,
    enabled: Vec<(String, Binding)>,
}

impl SimSession {
    pub fn new(net: PrTNet) -> SimSession {
        let current = Marking::initial(&net);
        let enabled = enabled(&net, &current);
        SimSession {
            net,
            current,
            history: Vec::new(),
            enabled,
        }
    }

    pub fn net(&self) -> &PrTNet {
        &self.net
    }

    pub fn current(&self) -> &Marking {
        &self.current
    }

    pub fn history(&self) -> &[(String, Binding)] {
        &self.history
    }

    pub fn enabled(&self) -> &[(String, Binding)] {
        &self.enabled
    }

    fn replay(&mut self) {
        let mut m = Marking::initial(&self.net);
        for (t, b) in &self.history {
            m = fire(&self.net, &m, t, b).expect("history replays");
        }
        self.current = m;
        self.enabled = enabled(&self.net, &self.current);
    }

    pub fn step(&mut self, choice: Choice) -> Result<(), SimError> {
        match choice {
            Choice::Index(i) => {
                let (t, b) = self.enabled.get(i).cloned().ok_or(SimError::BadChoice {
                    choice: i,
                    available: self.enabled.len(),
                })?;
                self.current = fire(&self.net, &self.current, &t, &b).expect("enabled pair fires");
                self.history.push((t, b));
                self.enabled = enabled(&self.net, &self.current);
            }
            Choice::Undo => {
                self.history.pop().ok_or(SimError::EmptyHistory)?;
                self.replay();
            }
            Choice::Reset => {
                self.history.clear();
                self.replay();
            }
        }
        Ok(())
    }

    /// `name(a1, a2)` for an enabled or historical firing.
    pub fn call_text(&self, t: &str, b: &Binding) -> String {
        let Some(tr) = self.net.transition(t) else {
            return t.to_string();
        };
        let args: Vec<String> = self
            .net
            .call_params(tr)
            .iter()
            .filter_map(|p| b.get(p).map(ToString::to_string))
            .collect();
        format!("{}({})", tr.name, args.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Atom;
    use crate::fixtures;
    use crate::ingest::parse_design_model;
    use crate::netgen::{compile_model, NetgenOptions};

    fn login() -> SimSession {
        let model = parse_design_model(fixtures::LOGIN_MODEL.as_bytes()).unwrap();
        SimSession::new(compile_model(&model, NetgenOptions::default()).unwrap())
    }

    #[test]
    fn first_choice_binds_the_name() {
        let mut s = login();
        assert_eq!(s.enabled().len(), 1);
        s.step(Choice::Index(0)).unwrap();
        let expected: Binding = [("name".to_string(), Atom::Symbol("UID".into()))].into();
        assert_eq!(s.history(), &[("T1".to_string(), expected)]);
    }

    #[test]
    fn reset_restores_initial_marking() {
        let mut s = login();
        s.step(Choice::Index(0)).unwrap();
        s.step(Choice::Index(0)).unwrap();
        s.step(Choice::Reset).unwrap();
        assert_eq!(s.current(), &Marking::initial(s.net()));
        assert!(s.history().is_empty());
    }

    #[test]
    fn undo_replays_history() {
        let mut s = login();
        s.step(Choice::Index(0)).unwrap();
        let after_one = s.current().clone();
        s.step(Choice::Index(0)).unwrap();
        s.step(Choice::Undo).unwrap();
        assert_eq!(s.current(), &after_one);
    }

    #[test]
    fn out_of_range_choice() {
        let mut s = login();
        assert_eq!(s.step(Choice::Index(7)).unwrap_err().code(), "bad-choice");
        assert_eq!(s.history().len(), 0);
    }
}
