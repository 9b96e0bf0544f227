//! BILOU actions, their grammar, and the span codec.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::LabeledSpan;

/// One transition. Label indices refer to a [`TagInventory`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Out,
    Begin(usize),
    Inside(usize),
    Last(usize),
    Unit(usize),
}

impl Action {
    pub fn label(self) -> Option<usize> {
        match self {
            Action::Out => None,
            Action::Begin(l) | Action::Inside(l) | Action::Last(l) | Action::Unit(l) => Some(l),
        }
    }

    /// True for actions that leave an entity open.
    pub fn is_open(self) -> bool {
        matches!(self, Action::Begin(_) | Action::Inside(_))
    }

    /// True for actions that start an entity.
    pub fn starts_entity(self) -> bool {
        matches!(self, Action::Begin(_) | Action::Unit(_))
    }
}

/// Entity labels and the action set derived from them.
///
/// Action order is `O`, then `B, I, L, U` for each label in label order;
/// ties in decoding go to the earlier action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagInventory {
    labels: Vec<String>,
}

impl TagInventory {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        TagInventory {
            labels: set.into_iter().collect(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn action_count(&self) -> usize {
        4 * self.labels.len() + 1
    }

    pub fn action_index(&self, action: Action) -> usize {
        match action {
            Action::Out => 0,
            Action::Begin(l) => 1 + 4 * l,
            Action::Inside(l) => 2 + 4 * l,
            Action::Last(l) => 3 + 4 * l,
            Action::Unit(l) => 4 + 4 * l,
        }
    }

    pub fn action(&self, index: usize) -> Action {
        assert!(index < self.action_count(), "action index out of range");
        if index == 0 {
            return Action::Out;
        }
        let l = (index - 1) / 4;
        match (index - 1) % 4 {
            0 => Action::Begin(l),
            1 => Action::Inside(l),
            2 => Action::Last(l),
            _ => Action::Unit(l),
        }
    }

    pub fn actions(&self) -> impl Iterator<Item = Action> + '_ {
        (0..self.action_count()).map(|i| self.action(i))
    }

    pub fn name(&self, action: Action) -> String {
        ActionName(self, action).to_string()
    }

    /// Parses `O`, `B-Drug`, `U-Dosage`, ...
    pub fn parse_action(&self, name: &str) -> Option<Action> {
        if name == "O" {
            return Some(Action::Out);
        }
        let (tag, label) = name.split_once('-')?;
        let l = self.label_index(label)?;
        Some(match tag {
            "B" => Action::Begin(l),
            "I" => Action::Inside(l),
            "L" => Action::Last(l),
            "U" => Action::Unit(l),
            _ => return None,
        })
    }
}

struct ActionName<'a>(&'a TagInventory, Action);

impl fmt::Display for ActionName<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = &self.0.labels;
        match self.1 {
            Action::Out => f.write_str("O"),
            Action::Begin(l) => write!(f, "B-{}", labels[l]),
            Action::Inside(l) => write!(f, "I-{}", labels[l]),
            Action::Last(l) => write!(f, "L-{}", labels[l]),
            Action::Unit(l) => write!(f, "U-{}", labels[l]),
        }
    }
}

/// Mask over the inventory's actions, given the previous action (`None`
/// at sentence start) and whether the current token is the last one.
pub fn valid_actions(
    prev: Option<Action>,
    is_last_token: bool,
    inventory: &TagInventory,
) -> Vec<bool> {
    let mut mask = vec![false; inventory.action_count()];
    match prev {
        Some(Action::Begin(l)) | Some(Action::Inside(l)) => {
            if !is_last_token {
                mask[inventory.action_index(Action::Inside(l))] = true;
            }
            mask[inventory.action_index(Action::Last(l))] = true;
        }
        _ => {
            mask[0] = true;
            for l in 0..inventory.labels.len() {
                mask[inventory.action_index(Action::Unit(l))] = true;
                if !is_last_token {
                    mask[inventory.action_index(Action::Begin(l))] = true;
                }
            }
        }
    }
    mask
}

/// A labeled inclusive token range.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSpan {
    pub first: usize,
    pub last: usize,
    pub label: String,
}

impl TokenSpan {
    pub fn new(first: usize, last: usize, label: impl Into<String>) -> Self {
        TokenSpan {
            first,
            last,
            label: label.into(),
        }
    }
}

impl From<&LabeledSpan> for TokenSpan {
    fn from(s: &LabeledSpan) -> Self {
        TokenSpan::new(s.first, s.last, s.label.clone())
    }
}

/// Encodes disjoint spans as one action per token.
pub fn encode_bilou(
    token_count: usize,
    spans: &[TokenSpan],
    inventory: &TagInventory,
) -> Result<Vec<Action>> {
    let mut actions = vec![Action::Out; token_count];
    let mut taken = vec![false; token_count];
    for s in spans {
        if s.first > s.last || s.last >= token_count {
            return Err(Error::Precondition(format!(
                "span {} ({}, {}) outside {token_count} tokens",
                s.label, s.first, s.last
            )));
        }
        let l = inventory.label_index(&s.label).ok_or_else(|| {
            Error::Precondition(format!("label {:?} not in the tag inventory", s.label))
        })?;
        for t in s.first..=s.last {
            if taken[t] {
                return Err(Error::Precondition(format!(
                    "span {} ({}, {}) overlaps another span at token {t}",
                    s.label, s.first, s.last
                )));
            }
            taken[t] = true;
            actions[t] = if s.first == s.last {
                Action::Unit(l)
            } else if t == s.first {
                Action::Begin(l)
            } else if t == s.last {
                Action::Last(l)
            } else {
                Action::Inside(l)
            };
        }
    }
    Ok(actions)
}

/// Decodes a grammatical action sequence into spans ordered by position.
pub fn decode_bilou(actions: &[Action], inventory: &TagInventory) -> Result<Vec<TokenSpan>> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    let mut prev = None;
    for (t, &a) in actions.iter().enumerate() {
        if a.label().is_some_and(|l| l >= inventory.labels.len()) {
            return Err(Error::Structure {
                position: t,
                message: "label index outside the inventory".into(),
            });
        }
        let mask = valid_actions(prev, t + 1 == actions.len(), inventory);
        if !mask[inventory.action_index(a)] {
            let prev_name = prev.map_or("start".to_string(), |p| inventory.name(p));
            return Err(Error::Structure {
                position: t,
                message: format!("{} cannot follow {prev_name}", inventory.name(a)),
            });
        }
        match a {
            Action::Out => {}
            Action::Unit(l) => spans.push(TokenSpan::new(t, t, inventory.labels[l].clone())),
            Action::Begin(_) => open = Some(t),
            Action::Inside(_) => {}
            Action::Last(l) => {
                let first = open.take().expect("grammar guarantees an open entity");
                spans.push(TokenSpan::new(first, t, inventory.labels[l].clone()));
            }
        }
        prev = Some(a);
    }
    Ok(spans)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv() -> TagInventory {
        TagInventory::new(["Drug", "Dosage"])
    }

    fn names(inv: &TagInventory, actions: &[Action]) -> Vec<String> {
        actions.iter().map(|&a| inv.name(a)).collect()
    }

    #[test]
    fn inventory_layout() {
        let inv = inv();
        assert_eq!(inv.labels(), ["Dosage", "Drug"]);
        assert_eq!(inv.action_count(), 9);
        for i in 0..inv.action_count() {
            assert_eq!(inv.action_index(inv.action(i)), i);
            assert_eq!(
                inv.parse_action(&inv.name(inv.action(i))),
                Some(inv.action(i))
            );
        }
    }

    #[test]
    fn encodes_multi_token_span() {
        let inv = inv();
        let a = encode_bilou(4, &[TokenSpan::new(1, 3, "Drug")], &inv).unwrap();
        assert_eq!(names(&inv, &a), ["O", "B-Drug", "I-Drug", "L-Drug"]);
    }

    #[test]
    fn encodes_units() {
        let inv = inv();
        let a = encode_bilou(3, &[TokenSpan::new(0, 0, "Dosage")], &inv).unwrap();
        assert_eq!(names(&inv, &a), ["U-Dosage", "O", "O"]);
        let inv = TagInventory::new(["A", "B"]);
        let a = encode_bilou(
            2,
            &[TokenSpan::new(0, 0, "A"), TokenSpan::new(1, 1, "B")],
            &inv,
        )
        .unwrap();
        assert_eq!(names(&inv, &a), ["U-A", "U-B"]);
    }

    #[test]
    fn encode_rejects_overlap_and_unknown_labels() {
        let inv = inv();
        let overlapping = [TokenSpan::new(0, 1, "Drug"), TokenSpan::new(1, 2, "Dosage")];
        assert!(matches!(
            encode_bilou(3, &overlapping, &inv),
            Err(Error::Precondition(_))
        ));
        assert!(encode_bilou(3, &[TokenSpan::new(0, 0, "ADE")], &inv).is_err());
        assert!(encode_bilou(3, &[TokenSpan::new(2, 3, "Drug")], &inv).is_err());
    }

    #[test]
    fn decodes() {
        let inv = inv();
        let d = inv.label_index("Drug").unwrap();
        assert_eq!(
            decode_bilou(&[Action::Out, Action::Begin(d), Action::Last(d)], &inv).unwrap(),
            vec![TokenSpan::new(1, 2, "Drug")]
        );
        assert_eq!(
            decode_bilou(&[Action::Unit(d)], &inv).unwrap(),
            vec![TokenSpan::new(0, 0, "Drug")]
        );
    }

    #[test]
    fn decode_names_first_bad_position() {
        let inv = inv();
        let d = inv.label_index("Drug").unwrap();
        let err = decode_bilou(&[Action::Begin(d), Action::Out, Action::Out], &inv).unwrap_err();
        assert!(matches!(err, Error::Structure { position: 1, .. }), "{err}");
        let err = decode_bilou(&[Action::Out, Action::Begin(d)], &inv).unwrap_err();
        assert!(matches!(err, Error::Structure { position: 1, .. }));
        let err = decode_bilou(&[Action::Begin(d), Action::Last(1 - d)], &inv).unwrap_err();
        assert!(matches!(err, Error::Structure { position: 1, .. }));
        let err = decode_bilou(&[Action::Inside(d)], &inv).unwrap_err();
        assert!(matches!(err, Error::Structure { position: 0, .. }));
    }

    #[test]
    fn masks() {
        let inv = TagInventory::new(["Drug"]);
        let allowed = |prev, last| -> Vec<String> {
            valid_actions(prev, last, &inv)
                .iter()
                .enumerate()
                .filter(|(_, &ok)| ok)
                .map(|(i, _)| inv.name(inv.action(i)))
                .collect()
        };
        assert_eq!(allowed(Some(Action::Begin(0)), false), ["I-Drug", "L-Drug"]);
        assert_eq!(allowed(Some(Action::Begin(0)), true), ["L-Drug"]);
        assert_eq!(allowed(None, true), ["O", "U-Drug"]);
        assert_eq!(
            allowed(Some(Action::Last(0)), false),
            ["O", "B-Drug", "U-Drug"]
        );
    }
}
