use std::collections::HashMap;

use crate::error::{FameError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    ClassInstance,
    GlobalNegative,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::ClassInstance => "class_instance",
            Role::GlobalNegative => "global_negative",
            Role::Test => "test",
        }
    }

    /// Roles whose images are flip-expanded.
    pub fn is_training(self) -> bool {
        self != Role::Test
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub path: String,
    pub label: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.role == role)
    }

    /// Sorted labels of class instances and test images.
    pub fn class_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .records
            .iter()
            .filter(|r| r.role != Role::GlobalNegative)
            .map(|r| r.label.clone())
            .collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn to_text(&self) -> String {
        self.records
            .iter()
            .map(|r| format!("{}\t{}\t{}\n", r.path, r.label, r.role.as_str()))
            .collect()
    }
}

/// Parses `path TAB label TAB role` lines. Blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let mut records = Vec::new();
    let mut first_line: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(FameError::line(
                line,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let role = match fields[2].trim() {
            "class_instance" => Role::ClassInstance,
            "global_negative" => Role::GlobalNegative,
            "test" => Role::Test,
            other => return Err(FameError::line(line, format!("unknown role {other:?}"))),
        };
        let path = fields[0].to_string();
        let label = fields[1].to_string();
        if path.is_empty() {
            return Err(FameError::line(line, "empty path"));
        }
        if role == Role::ClassInstance && label.is_empty() {
            return Err(FameError::line(line, "class instance without a label"));
        }
        if let Some(first) = first_line.insert(path.clone(), line) {
            return Err(FameError::line(
                line,
                format!("duplicate path {path:?} (lines {first} and {line})"),
            ));
        }
        records.push(ManifestRecord { path, label, role });
    }
    Ok(Manifest { records })
}
