//! Versioned prompt templates. Template files live in `prompts/` next to the
//! crate manifest and are compiled in; a version id is `<name>@<semver>`.

use crate::domain::Language;
use crate::error::{Error, Result};

pub const DESCRIBE_V1: &str = "describe@1.0.0";
pub const GENERATE_V1: &str = "generate@1.0.0";
pub const JUDGE_V1: &str = "judge@1.0.0";

const TEMPLATES: &[(&str, &str)] = &[
    (DESCRIBE_V1, include_str!("../prompts/describe-1.0.0.txt")),
    ("describe-user@1.0.0", include_str!("../prompts/describe-user-1.0.0.txt")),
    (GENERATE_V1, include_str!("../prompts/generate-1.0.0.txt")),
    (JUDGE_V1, include_str!("../prompts/judge-1.0.0.txt")),
];

pub fn template(version: &str) -> Result<&'static str> {
    TEMPLATES
        .iter()
        .find(|(id, _)| *id == version)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::UnknownTemplate(version.to_string()))
}

/// The companion template of `version` with `-user` appended to its name.
pub fn user_template(version: &str) -> Result<&'static str> {
    let (name, semver) = version
        .split_once('@')
        .ok_or_else(|| Error::UnknownTemplate(version.to_string()))?;
    template(&format!("{name}-user@{semver}"))
}

/// Replace every `{{key}}` with its value.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in vars {
        out = out.replace(&format!("{{{{{key}}}}}"), value);
    }
    out
}

pub fn language_name(language: Language) -> &'static str {
    match language {
        Language::Zh => "Simplified Chinese",
        Language::En => "English",
    }
}
