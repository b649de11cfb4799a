// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::Path;

use crate::error::Result;
use crate::probe::{score_batch, Direction};
use crate::store::{Category, LabeledDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct ExtremeItem {
    pub index: usize,
    pub sample_id: String,
    pub question: String,
    pub answer: String,
    pub gold: Vec<String>,
    pub category: Category,
    pub score: f64,
}

/// Highest- and lowest-scoring samples within the correct and incorrect
/// groups. High lists are in descending score order, low lists ascending;
/// equal scores keep dataset order.
#[derive(Debug, Clone)]
pub struct Extremes {
    pub correct_high: Vec<ExtremeItem>,
    pub correct_low: Vec<ExtremeItem>,
    pub incorrect_high: Vec<ExtremeItem>,
    pub incorrect_low: Vec<ExtremeItem>,
}

pub fn extremes(dir: &Direction, data: &LabeledDataset, top_k: usize) -> Result<Extremes> {
    let scores = score_batch(dir, &data.matrix)?;
    let item = |i: usize| {
        let m = &data.meta[i];
        ExtremeItem {
            index: i,
            sample_id: m.sample_id.clone(),
            question: m.question.clone(),
            answer: m.answer.clone(),
            gold: m.gold.clone(),
            category: m.category,
            score: scores[i],
        }
    };
    let ranked = |correct: bool| {
        let mut idx: Vec<usize> = (0..data.n())
            .filter(|&i| data.meta[i].is_correct() == correct)
            .collect();
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let high: Vec<ExtremeItem> = idx.iter().take(top_k).map(|&i| item(i)).collect();
        idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        let low: Vec<ExtremeItem> = idx.iter().take(top_k).map(|&i| item(i)).collect();
        (high, low)
    };
    let (correct_high, correct_low) = ranked(true);
    let (incorrect_high, incorrect_low) = ranked(false);
    Ok(Extremes {
        correct_high,
        correct_low,
        incorrect_high,
        incorrect_low,
    })
}

pub fn write_extremes_csv(ex: &Extremes, path: &Path) -> Result<()> {
    let header = [
        "group",
        "rank",
        "sample_id",
        "score",
        "category",
        "question",
        "answer",
        "gold",
    ];
    let mut rows = Vec::new();
    for (name, list) in [
        ("correct_high", &ex.correct_high),
        ("correct_low", &ex.correct_low),
        ("incorrect_high", &ex.incorrect_high),
        ("incorrect_low", &ex.incorrect_low),
    ] {
        for (rank, it) in list.iter().enumerate() {
            rows.push(vec![
                name.to_string(),
                (rank + 1).to_string(),
                it.sample_id.clone(),
                it.score.to_string(),
                it.category.to_string(),
                it.question.clone(),
                it.answer.clone(),
                it.gold.join(" | "),
            ]);
        }
    }
    super::write_csv(path, &header, rows)
}
