//! On-disk dataset layout: `users.jsonl`, `follows.csv`, `cascades.jsonl`,
//! `urls.jsonl`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::types::{CascadeRecord, Dataset, SocialGraph, UrlStory, User, UserId};
use crate::error::{Error, Result};

pub const USERS_FILE: &str = "users.jsonl";
pub const FOLLOWS_FILE: &str = "follows.csv";
pub const CASCADES_FILE: &str = "cascades.jsonl";
pub const URLS_FILE: &str = "urls.jsonl";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn write_follows(path: &Path, social: &SocialGraph) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "follower_id,followee_id").map_err(io)?;
    for (a, b) in social.follow_pairs() {
        writeln!(w, "{a},{b}").map_err(io)?;
    }
    w.flush().map_err(io)
}

fn read_follows(path: &Path) -> Result<Vec<(UserId, UserId)>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with("follower")) {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: path.display().to_string(),
            line: n + 1,
            message,
        };
        let (a, b) = line.split_once(',').ok_or_else(|| bad("expected two columns".into()))?;
        let a = a.trim().parse().map_err(|e| bad(format!("follower id: {e}")))?;
        let b = b.trim().parse().map_err(|e| bad(format!("followee id: {e}")))?;
        out.push((UserId(a), UserId(b)));
    }
    Ok(out)
}

pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(&dir.join(USERS_FILE), data.social.users())?;
    write_follows(&dir.join(FOLLOWS_FILE), &data.social)?;
    write_jsonl(&dir.join(CASCADES_FILE), &data.cascades)?;
    write_jsonl(&dir.join(URLS_FILE), &data.stories)
}

/// Loads and validates a dataset directory.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let users: Vec<User> = read_jsonl(&dir.join(USERS_FILE))?;
    let follows = read_follows(&dir.join(FOLLOWS_FILE))?;
    let cascades: Vec<CascadeRecord> = read_jsonl(&dir.join(CASCADES_FILE))?;
    let stories: Vec<UrlStory> = read_jsonl(&dir.join(URLS_FILE))?;
    let data = Dataset {
        social: SocialGraph::new(users, follows)?,
        stories,
        cascades,
    };
    data.validate()?;
    Ok(data)
}
