use std::collections::BTreeMap;

use super::network::{forward, ModelParams, PreparedGraph};
use crate::data::{CredibilityIndex, UserId};
use crate::error::Result;
use crate::eval::report::CsvTable;

/// Mean node embedding of one user over every graph they appear in.
#[derive(Debug, Clone, PartialEq)]
pub struct UserEmbedding {
    pub user_id: UserId,
    pub credibility: Option<f64>,
    pub embedding: Vec<f64>,
}

/// Sorted by user id.
pub fn user_embeddings(
    graphs: &[PreparedGraph],
    params: &ModelParams,
    credibility: &CredibilityIndex,
) -> Result<Vec<UserEmbedding>> {
    let width = params.hidden();
    let mut acc: BTreeMap<UserId, (Vec<f64>, usize)> = BTreeMap::new();
    for g in graphs {
        let pred = forward(g, params)?;
        for (row, user) in g.authors.iter().enumerate() {
            let e = acc.entry(*user).or_insert_with(|| (vec![0.0; width], 0));
            for (a, x) in e.0.iter_mut().zip(pred.node_embeddings.row(row)) {
                *a += x;
            }
            e.1 += 1;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(user_id, (sum, n))| UserEmbedding {
            user_id,
            credibility: credibility.get(user_id),
            embedding: sum.into_iter().map(|x| x / n as f64).collect(),
        })
        .collect())
}

pub fn embeddings_table(rows: &[UserEmbedding]) -> CsvTable {
    let width = rows.first().map_or(0, |r| r.embedding.len());
    let mut header = vec!["user_id".to_string(), "credibility".to_string()];
    header.extend((0..width).map(|k| format!("emb_{k}")));
    let mut table = CsvTable::new(header);
    for r in rows {
        let mut cells = vec![r.user_id.to_string(), r.credibility.map(|c| c.to_string()).unwrap_or_default()];
        cells.extend(r.embedding.iter().map(|x| x.to_string()));
        table.push(cells);
    }
    table
}
