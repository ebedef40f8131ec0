use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::recipe::{Recipe, Slot};
use crate::error::{Error, Result};

/// Which function label a classifier is trained to predict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    TriggerFunction,
    ActionFunction,
}

impl Target {
    pub fn slot(self) -> Slot {
        match self {
            Target::TriggerFunction => Slot::Trigger,
            Target::ActionFunction => Slot::Action,
        }
    }

    pub fn function(self, recipe: &Recipe) -> &str {
        recipe.function(self.slot())
    }

    pub fn channel(self, recipe: &Recipe) -> &str {
        recipe.channel(self.slot())
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::TriggerFunction => "trigger-function",
            Target::ActionFunction => "action-function",
        })
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trigger-function" | "trigger" => Ok(Target::TriggerFunction),
            "action-function" | "action" => Ok(Target::ActionFunction),
            other => Err(Error::Config(format!("unknown target {other:?}"))),
        }
    }
}

/// Catalog of function labels with their owning channels.
///
/// Labels are sorted, so ids are stable for a given label set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(String, String)>", into = "Vec<(String, String)>")]
pub struct LabelSpace {
    functions: Vec<String>,
    channels: Vec<String>,
    channel_of: Vec<usize>,
    index: BTreeMap<String, usize>,
}

impl LabelSpace {
    /// Builds a label space from `(function, channel)` pairs.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut owner: BTreeMap<String, String> = BTreeMap::new();
        for (function, channel) in pairs {
            match owner.get(&function) {
                Some(existing) if *existing != channel => {
                    return Err(Error::Data(format!(
                        "function {function:?} claimed by channels {existing:?} and {channel:?}"
                    )))
                }
                Some(_) => {}
                None => {
                    owner.insert(function, channel);
                }
            }
        }
        let channels: Vec<String> = owner
            .values()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let channel_ids: BTreeMap<&str, usize> = channels
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let channel_of = owner.values().map(|c| channel_ids[c.as_str()]).collect();
        let functions: Vec<String> = owner.keys().cloned().collect();
        let index = functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        Ok(LabelSpace {
            functions,
            channels,
            channel_of,
            index,
        })
    }

    pub fn from_recipes(recipes: &[Recipe], target: Target) -> Self {
        Self::from_pairs(recipes.iter().map(|r| {
            (
                target.function(r).to_string(),
                target.channel(r).to_string(),
            )
        }))
        .expect("validated recipes carry consistent channel ownership")
    }

    /// Number of function classes.
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[String] {
        &self.functions
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn id(&self, function: &str) -> Option<usize> {
        self.index.get(function).copied()
    }

    pub fn function(&self, id: usize) -> Result<&str> {
        self.functions
            .get(id)
            .map(String::as_str)
            .ok_or(Error::UnknownLabel(id))
    }

    pub fn channel_id(&self, function_id: usize) -> Result<usize> {
        self.channel_of
            .get(function_id)
            .copied()
            .ok_or(Error::UnknownLabel(function_id))
    }

    /// The channel that owns function `function_id`.
    pub fn channel(&self, function_id: usize) -> Result<&str> {
        Ok(&self.channels[self.channel_id(function_id)?])
    }
}

impl TryFrom<Vec<(String, String)>> for LabelSpace {
    type Error = Error;

    fn try_from(pairs: Vec<(String, String)>) -> Result<Self> {
        Self::from_pairs(pairs)
    }
}

impl From<LabelSpace> for Vec<(String, String)> {
    fn from(space: LabelSpace) -> Self {
        space
            .functions
            .iter()
            .zip(&space.channel_of)
            .map(|(f, &c)| (f.clone(), space.channels[c].clone()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> LabelSpace {
        LabelSpace::from_pairs([
            (
                "Dropbox.Add_file_from_URL".to_string(),
                "Dropbox".to_string(),
            ),
            (
                "Instagram.Any_new_photo".to_string(),
                "Instagram".to_string(),
            ),
            ("Dropbox.Append_to_file".to_string(), "Dropbox".to_string()),
        ])
        .unwrap()
    }

    #[test]
    fn ids_are_sorted_and_dense() {
        let s = space();
        assert_eq!(s.len(), 3);
        assert_eq!(s.function(0).unwrap(), "Dropbox.Add_file_from_URL");
        assert_eq!(s.id("Instagram.Any_new_photo"), Some(2));
    }

    #[test]
    fn channel_lookup() {
        let s = space();
        let f = s.id("Dropbox.Add_file_from_URL").unwrap();
        assert_eq!(s.channel(f).unwrap(), "Dropbox");
        assert!(matches!(s.channel(3), Err(Error::UnknownLabel(3))));
    }

    #[test]
    fn serialization_keeps_ids() {
        let s = space();
        let json = serde_json::to_string(&s).unwrap();
        let back: LabelSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn conflicting_owner_rejected() {
        let r = LabelSpace::from_pairs([
            ("A.f".to_string(), "A".to_string()),
            ("A.f".to_string(), "B".to_string()),
        ]);
        assert!(r.is_err());
    }
}
