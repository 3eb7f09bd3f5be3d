use std::collections::HashSet;
use std::path::Path;

use walkdir::WalkDir;

use super::{parse_sbu, SkeletonLayout, SkeletonSequence};
use crate::error::{Error, Result};

/// Sequence ids of a train/test partition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Parses a split file: `[train]` and `[test]` section headers, one sequence
/// id per line, `#` comments.
pub fn parse_split(text: &str) -> Result<Split> {
    let mut split = Split::default();
    let mut section: Option<bool> = None;
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[train]" => section = Some(true),
            "[test]" => section = Some(false),
            id => {
                let is_train = section.ok_or_else(|| {
                    Error::BadLayout(format!("split line {}: id {id:?} before any section", i + 1))
                })?;
                if !seen.insert(id.to_string()) {
                    return Err(Error::BadLayout(format!("split line {}: duplicate id {id:?}", i + 1)));
                }
                if is_train {
                    split.train.push(id.to_string());
                } else {
                    split.test.push(id.to_string());
                }
            }
        }
    }
    Ok(split)
}

/// Loads every `file_name` below `root`.
///
/// The sequence id is the file's directory relative to `root` (with `/`
/// separators) and the label is the name of that directory's parent, read as
/// a 1-based class number: `s01s02/03/001/skeleton_pos.txt` is sequence
/// `s01s02/03/001` of class 2. Sequences come back sorted by id.
pub fn load_sbu_dir(root: &Path, file_name: &str, layout: SkeletonLayout) -> Result<Vec<SkeletonSequence>> {
    let mut out = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() || entry.file_name() != file_name {
            continue;
        }
        let path = entry.path();
        let dir = path.parent().unwrap_or(root);
        let rel = dir
            .strip_prefix(root)
            .map_err(|_| Error::BadLayout(format!("{} is outside the root", path.display())))?;
        let parts: Vec<String> = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        if parts.len() < 2 {
            return Err(Error::BadLayout(format!(
                "{}: expected <class>/<sequence>/{file_name}",
                path.display()
            )));
        }
        let class_dir = &parts[parts.len() - 2];
        let label = class_dir
            .parse::<usize>()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| Error::BadLayout(format!("{}: class directory {class_dir:?} is not a 1-based number", path.display())))?
            - 1;
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        out.push(parse_sbu(&text, layout, &parts.join("/"), label)?);
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}
