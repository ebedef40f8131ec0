use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Trigger,
    Action,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::Trigger => "trigger",
            Slot::Action => "action",
        })
    }
}

/// Function arguments: slot -> (argument name -> value).
pub type Args = BTreeMap<Slot, BTreeMap<String, String>>;

/// One labeled If-Then recipe. Function labels are channel-qualified, e.g.
/// `Dropbox.Add_file_from_URL`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    pub description: String,
    pub trigger_channel: String,
    pub trigger_function: String,
    pub action_channel: String,
    pub action_function: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub args: Option<Args>,
}

impl Recipe {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.description.trim().is_empty() {
            return Err("empty description".into());
        }
        check_owned(&self.trigger_channel, &self.trigger_function, "trigger")?;
        check_owned(&self.action_channel, &self.action_function, "action")
    }

    pub fn channel(&self, slot: Slot) -> &str {
        match slot {
            Slot::Trigger => &self.trigger_channel,
            Slot::Action => &self.action_channel,
        }
    }

    pub fn function(&self, slot: Slot) -> &str {
        match slot {
            Slot::Trigger => &self.trigger_function,
            Slot::Action => &self.action_function,
        }
    }
}

fn check_owned(channel: &str, function: &str, side: &str) -> std::result::Result<(), String> {
    if channel.is_empty() {
        return Err(format!("empty {side}_channel"));
    }
    let owned = function
        .strip_prefix(channel)
        .and_then(|rest| rest.strip_prefix('.'))
        .is_some_and(|name| !name.is_empty());
    if owned {
        Ok(())
    } else {
        Err(format!(
            "{side}_function {function:?} does not belong to {side}_channel {channel:?}"
        ))
    }
}

/// Parses recipe JSONL. Blank lines are skipped; errors carry 1-based line numbers.
pub fn parse_recipes<R: BufRead>(input: R) -> Result<Vec<Recipe>> {
    let mut recipes = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let recipe: Recipe = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        recipe.validate().map_err(|message| Error::Validation {
            line: line_no,
            message,
        })?;
        recipes.push(recipe);
    }
    Ok(recipes)
}

pub fn load_recipes(path: &Path) -> Result<Vec<Recipe>> {
    let file = std::fs::File::open(path)?;
    parse_recipes(std::io::BufReader::new(file))
}

pub fn write_recipes<W: Write>(recipes: &[Recipe], mut out: W) -> Result<()> {
    for recipe in recipes {
        serde_json::to_writer(&mut out, recipe)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"description":"Autosave your Instagram photos to Dropbox","trigger_channel":"Instagram","trigger_function":"Instagram.Any_new_photo_by_you","action_channel":"Dropbox","action_function":"Dropbox.Add_file_from_URL","args":{"action":{"path":"IFTTT/Instagram"}}}"#;

    #[test]
    fn parses_valid_lines() {
        let text = format!("{GOOD}\n\n{GOOD}\n{GOOD}\n");
        let recipes = parse_recipes(text.as_bytes()).unwrap();
        assert_eq!(recipes.len(), 3);
        let args = recipes[0].args.as_ref().unwrap();
        assert_eq!(args[&Slot::Action]["path"], "IFTTT/Instagram");
    }

    #[test]
    fn missing_field_names_field_and_line() {
        let bad = r#"{"description":"x","trigger_channel":"A","action_channel":"B","action_function":"B.f"}"#;
        let text = format!("{GOOD}\n{bad}\n");
        let err = parse_recipes(text.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("trigger_function"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn channel_mismatch_is_validation_error() {
        let bad = GOOD.replace(
            "\"trigger_channel\":\"Instagram\"",
            "\"trigger_channel\":\"Flickr\"",
        );
        let err = parse_recipes(bad.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Validation { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn empty_description_rejected() {
        let bad = GOOD.replace("Autosave your Instagram photos to Dropbox", "   ");
        assert!(matches!(
            parse_recipes(bad.as_bytes()),
            Err(Error::Validation { .. })
        ));
    }

    #[test]
    fn prefix_must_end_at_separator() {
        assert!(check_owned("Box", "Boxnet.upload", "action").is_err());
        assert!(check_owned("Box", "Box.", "action").is_err());
        assert!(check_owned("Box", "Box.upload", "action").is_ok());
    }

    #[test]
    fn write_then_parse() {
        let recipes = parse_recipes(GOOD.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_recipes(&recipes, &mut buf).unwrap();
        assert_eq!(parse_recipes(buf.as_slice()).unwrap(), recipes);
    }
}
