//! Skill embeddings from per-posting co-occurrence, similarity queries, and
//! clustering.
//!
//! Postings are unordered skill sets, so a skill's context is every other
//! skill in the same posting — there is no window parameter. Embeddings are
//! trained with the skipgram objective and negative sampling; similarity is
//! cosine over the input-side vectors.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Bijection between skill ids and dense indices, with corpus frequencies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkillVocabulary {
    ids: Vec<String>,
    frequencies: Vec<u64>,
}

impl SkillVocabulary {
    /// Collects every distinct skill across the postings, in sorted order.
    pub fn from_postings(postings: &[BTreeSet<String>]) -> Result<Self> {
        let mut counts = std::collections::BTreeMap::new();
        for posting in postings {
            for skill in posting {
                *counts.entry(skill.clone()).or_insert(0u64) += 1;
            }
        }
        if counts.len() < 2 {
            return Err(Error::Corpus(format!(
                "vocabulary has {} skills; need at least 2",
                counts.len()
            )));
        }
        let (ids, frequencies) = counts.into_iter().unzip();
        Ok(Self { ids, frequencies })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn frequency(&self, index: usize) -> u64 {
        self.frequencies[index]
    }

    pub fn index(&self, skill: &str) -> Result<usize> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(skill))
            .map_err(|_| Error::UnknownSkill(skill.to_string()))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SkipgramConfig {
    pub dim: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub initial_lr: f64,
    pub min_lr: f64,
}

impl Default for SkipgramConfig {
    fn default() -> Self {
        Self {
            dim: 30,
            epochs: 15,
            negatives: 5,
            initial_lr: 0.025,
            min_lr: 1e-4,
        }
    }
}

/// Trained embedding: one row per vocabulary entry.
#[derive(Clone, Debug, PartialEq)]
pub struct SkillEmbedding {
    pub vocab: SkillVocabulary,
    pub dim: usize,
    /// Input-side vectors, `[vocab][dim]`.
    pub vectors: Vec<Vec<f64>>,
    pub epochs: usize,
    pub negatives: usize,
    pub seed: u64,
    /// Mean negative-sampling loss per epoch.
    pub loss_history: Vec<f64>,
}

impl SkillEmbedding {
    pub fn vector(&self, skill: &str) -> Result<&[f64]> {
        Ok(&self.vectors[self.vocab.index(skill)?])
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Trains skipgram with negative sampling over the postings.
///
/// Every ordered (center, context) pair within a posting is one positive
/// example; `negatives` draws from the unigram^0.75 distribution provide
/// the contrast (draws hitting the positive context are skipped). Single-
/// threaded with a fixed update order, so a seed fully determines the
/// result.
pub fn train_skipgram(
    postings: &[BTreeSet<String>],
    config: &SkipgramConfig,
    seed: u64,
) -> Result<SkillEmbedding> {
    if config.dim == 0 {
        return Err(Error::Config("embedding dimension must be >= 1".into()));
    }
    let vocab = SkillVocabulary::from_postings(postings)?;
    let pairs_per_pass: usize = postings
        .iter()
        .map(|p| {
            let k = p.len();
            k * k.saturating_sub(1)
        })
        .sum();
    if pairs_per_pass == 0 {
        return Err(Error::Corpus(
            "no posting contains two skills; nothing co-occurs".into(),
        ));
    }

    // unigram^0.75 sampling table
    let weights: Vec<f64> = (0..vocab.len())
        .map(|i| (vocab.frequency(i) as f64).powf(0.75))
        .collect();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    let total_weight = acc;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = config.dim;
    let mut input: Vec<Vec<f64>> = (0..vocab.len())
        .map(|_| {
            (0..dim)
                .map(|_| rng.gen_range(-0.5..0.5) / dim as f64)
                .collect()
        })
        .collect();
    let mut output = vec![vec![0.0; dim]; vocab.len()];

    let total_steps = (config.epochs * pairs_per_pass).max(1) as f64;
    let mut step = 0usize;
    let mut loss_history = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        let mut epoch_loss = 0.0;
        let mut epoch_pairs = 0usize;
        for posting in postings {
            let indices: Vec<usize> = posting
                .iter()
                .map(|s| vocab.index(s).expect("vocabulary covers the corpus"))
                .collect();
            if indices.len() < 2 {
                continue;
            }
            for &center in &indices {
                for &context in &indices {
                    if context == center {
                        continue;
                    }
                    let lr = (config.initial_lr * (1.0 - step as f64 / total_steps))
                        .max(config.min_lr);
                    step += 1;
                    epoch_pairs += 1;

                    let mut grad_center = vec![0.0; dim];
                    let mut pair_loss = 0.0;
                    {
                        // positive example
                        let score: f64 = input[center]
                            .iter()
                            .zip(&output[context])
                            .map(|(a, b)| a * b)
                            .sum();
                        let p = sigmoid(score);
                        pair_loss -= p.max(1e-12).ln();
                        let g = p - 1.0;
                        for d in 0..dim {
                            grad_center[d] += g * output[context][d];
                            output[context][d] -= lr * g * input[center][d];
                        }
                    }
                    for _ in 0..config.negatives {
                        let target = rng.gen_range(0.0..total_weight);
                        let negative = cumulative.partition_point(|c| *c < target);
                        if negative == context {
                            continue; // drew the positive; skip this one
                        }
                        let score: f64 = input[center]
                            .iter()
                            .zip(&output[negative])
                            .map(|(a, b)| a * b)
                            .sum();
                        let p = sigmoid(score);
                        pair_loss -= (1.0 - p).max(1e-12).ln();
                        let g = p;
                        for d in 0..dim {
                            grad_center[d] += g * output[negative][d];
                            output[negative][d] -= lr * g * input[center][d];
                        }
                    }
                    for d in 0..dim {
                        input[center][d] -= lr * grad_center[d];
                    }
                    epoch_loss += pair_loss;
                }
            }
        }
        loss_history.push(epoch_loss / epoch_pairs.max(1) as f64);
    }

    Ok(SkillEmbedding {
        vocab,
        dim,
        vectors: input,
        epochs: config.epochs,
        negatives: config.negatives,
        seed,
        loss_history,
    })
}

/// Cosine of the angle between two vectors.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok(dot / (nu * nv))
}

/// A key skill with its most-similar companions.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterDataset {
    pub key_skill: String,
    /// `(skill, similarity)`, sorted by descending similarity; the key leads
    /// with similarity exactly 1.
    pub members: Vec<(String, f64)>,
}

/// The key skill plus its `size - 1` nearest neighbours by cosine
/// similarity over the embedding. Ties break by ascending skill id.
pub fn build_cluster_dataset(
    embedding: &SkillEmbedding,
    key_skill: &str,
    size: usize,
) -> Result<ClusterDataset> {
    if size == 0 {
        return Err(Error::Config("cluster size must be >= 1".into()));
    }
    if size > embedding.vocab.len() {
        return Err(Error::Config(format!(
            "cluster size {size} exceeds vocabulary size {}",
            embedding.vocab.len()
        )));
    }
    let key_index = embedding.vocab.index(key_skill)?;
    let key_vector = &embedding.vectors[key_index];

    let mut scored: Vec<(String, f64)> = Vec::with_capacity(embedding.vocab.len() - 1);
    for i in 0..embedding.vocab.len() {
        if i == key_index {
            continue;
        }
        let sim = cosine_similarity(key_vector, &embedding.vectors[i])?;
        scored.push((embedding.vocab.id(i).to_string(), sim));
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("similarities are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(size - 1);

    let mut members = Vec::with_capacity(size);
    members.push((key_skill.to_string(), 1.0));
    members.extend(scored);
    Ok(ClusterDataset {
        key_skill: key_skill.to_string(),
        members,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct KmeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

/// Lloyd's algorithm from `k` distinct seeded starting points. Stops at an
/// assignment fixpoint or `max_iter`. Empty clusters keep their previous
/// centroid.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Result<KmeansResult> {
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if k > points.len() {
        return Err(Error::Config(format!(
            "k = {k} exceeds the {} available points",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput("points differ in dimension".into()));
    }

    // k distinct indices by partial Fisher-Yates.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..points.len()).collect();
    for i in 0..k {
        let j = rng.gen_range(i..order.len());
        order.swap(i, j);
    }
    let mut centroids: Vec<Vec<f64>> = order[..k].iter().map(|&i| points[i].clone()).collect();

    let squared_distance = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };

    let mut assignments = vec![usize::MAX; points.len()];
    let mut objective_history = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        // Assignment step; nearest centroid, ties to the lowest index.
        let mut changed = false;
        let mut objective = 0.0;
        for (p, point) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = squared_distance(point, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = squared_distance(point, centroid);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            if assignments[p] != best {
                assignments[p] = best;
                changed = true;
            }
            objective += best_d;
        }
        objective_history.push(objective);
        if !changed {
            break;
        }
        // Update step.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, point) in points.iter().enumerate() {
            let c = assignments[p];
            counts[c] += 1;
            for d in 0..dim {
                sums[c][d] += point[d];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..dim {
                    centroids[c][d] = sums[c][d] / counts[c] as f64;
                }
            }
        }
    }

    Ok(KmeansResult {
        assignments,
        centroids,
        objective_history,
        iterations,
    })
}

/// Writes the embedding as a text file: header `vocab dim`, then one line
/// per skill (`id v1 ... vd`, shortest-roundtrip decimal).
pub fn write_embedding_file(path: &Path, embedding: &SkillEmbedding) -> Result<()> {
    use std::fmt::Write as _;
    let mut text = format!("{} {}\n", embedding.vocab.len(), embedding.dim);
    for i in 0..embedding.vocab.len() {
        write!(text, "{}", embedding.vocab.id(i)).expect("string write");
        for v in &embedding.vectors[i] {
            write!(text, " {v}").expect("string write");
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a cosine query set back from `write_embedding_file` output.
/// Frequencies are not stored in the file, so they come back as 1.
pub fn read_embedding_file(path: &Path) -> Result<SkillEmbedding> {
    let text = std::fs::read_to_string(path)?;
    let parse_err = |detail: String| Error::Parse {
        path: path.display().to_string(),
        detail,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err("empty file".into()))?;
    let mut parts = header.split_whitespace();
    let vocab_len: usize = parts
        .next()
        .and_then(|p| p.parse().ok())
        .ok_or_else(|| parse_err("bad vocabulary count".into()))?;
    let dim: usize = parts
        .next()
        .and_then(|p| p.parse().ok())
        .ok_or_else(|| parse_err("bad dimension".into()))?;

    let mut ids = Vec::with_capacity(vocab_len);
    let mut vectors = Vec::with_capacity(vocab_len);
    for (k, line) in lines.enumerate() {
        let mut fields = line.split_whitespace();
        let id = fields
            .next()
            .ok_or_else(|| parse_err(format!("line {}: missing id", k + 2)))?;
        let vector: Vec<f64> = fields
            .map(|f| {
                f.parse()
                    .map_err(|_| parse_err(format!("line {}: bad value `{f}`", k + 2)))
            })
            .collect::<Result<_>>()?;
        if vector.len() != dim {
            return Err(parse_err(format!(
                "line {}: {} values, expected {dim}",
                k + 2,
                vector.len()
            )));
        }
        ids.push(id.to_string());
        vectors.push(vector);
    }
    if ids.len() != vocab_len {
        return Err(parse_err(format!(
            "{} rows, header promised {vocab_len}",
            ids.len()
        )));
    }
    let frequencies = vec![1; ids.len()];
    Ok(SkillEmbedding {
        vocab: SkillVocabulary { ids, frequencies },
        dim,
        vectors,
        epochs: 0,
        negatives: 0,
        seed: 0,
        loss_history: Vec::new(),
    })
}

/// Cluster dataset CSV: `key_skill,member_skill,similarity`.
pub fn write_cluster_csv(path: &Path, clusters: &[ClusterDataset]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["key_skill", "member_skill", "similarity"])?;
    for cluster in clusters {
        for (member, similarity) in &cluster.members {
            writer.write_record([
                cluster.key_skill.as_str(),
                member.as_str(),
                &format!("{similarity}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}
