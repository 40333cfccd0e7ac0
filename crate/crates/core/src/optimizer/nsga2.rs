//! Elitist non-dominated sorting genetic algorithm over a box-bounded real
//! decision space. All objectives are minimized.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::hypervolume::{hypervolume, Archive};
use crate::error::{Error, Result};

/// Search hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Nsga2Settings {
    pub population: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    pub crossover_eta: f64,
    /// Per-variable mutation probability; `None` means `1/n`.
    pub mutation_probability: Option<f64>,
    pub mutation_eta: f64,
    pub seed: u64,
    /// Evaluation threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for Nsga2Settings {
    fn default() -> Self {
        Self {
            population: 48,
            generations: 60,
            crossover_probability: 0.9,
            crossover_eta: 15.0,
            mutation_probability: None,
            mutation_eta: 20.0,
            seed: 42,
            workers: 0,
        }
    }
}

impl Nsga2Settings {
    pub fn validate(&self) -> Result<()> {
        if self.population < 8 || !self.population.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "population must be even and at least 8, got {}",
                self.population
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_probability) {
            return Err(Error::Config("crossover probability outside [0, 1]".into()));
        }
        if let Some(p) = self.mutation_probability {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config("mutation probability outside [0, 1]".into()));
            }
        }
        if !(self.crossover_eta >= 0.0 && self.mutation_eta >= 0.0) {
            return Err(Error::Config("distribution indices must be non-negative".into()));
        }
        Ok(())
    }
}

/// Evaluated point of the search.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    /// Generation in which it was created (0 = initial population).
    pub generation: usize,
    /// Running evaluation index.
    pub evaluation: usize,
}

/// Outcome of a run.
#[derive(Debug, Clone)]
pub struct Nsga2Result {
    /// Mutually non-dominated archive, at most `population` members.
    pub archive: Vec<Individual>,
    pub final_population: Vec<Individual>,
    /// Archive hypervolume after the initial population and after each
    /// generation.
    pub hypervolume_history: Vec<f64>,
    pub reference_point: Vec<f64>,
    pub evaluations: usize,
}

/// `a` dominates `b` under minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fast non-dominated sort; returns fronts of indices, best first, each in
/// ascending index order.
pub fn non_dominated_fronts(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&points[i], &points[j]) {
                dominating[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominating[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of one front.
pub fn crowding_distance(points: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = points[front[0]].len();
    for k in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            points[front[a]][k]
                .partial_cmp(&points[front[b]][k])
                .unwrap_or(Ordering::Equal)
                .then(front[a].cmp(&front[b]))
        });
        let lo = points[front[order[0]]][k];
        let hi = points[front[order[n - 1]]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..n - 1 {
                let gap = points[front[order[w + 1]]][k] - points[front[order[w - 1]]][k];
                dist[order[w]] += gap / (hi - lo);
            }
        }
    }
    dist
}

/// Rank and crowding of every point.
fn rank_and_crowd(points: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let mut rank = vec![0; points.len()];
    let mut crowd = vec![0.0; points.len()];
    for (r, front) in non_dominated_fronts(points).iter().enumerate() {
        let cd = crowding_distance(points, front);
        for (k, &i) in front.iter().enumerate() {
            rank[i] = r;
            crowd[i] = cd[k];
        }
    }
    (rank, crowd)
}

/// Indices of the `keep` best points by rank, then crowding distance
/// (larger first), then index.
fn environmental_selection(points: &[Vec<f64>], keep: usize) -> Vec<usize> {
    let (rank, crowd) = rank_and_crowd(points);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        rank[a]
            .cmp(&rank[b])
            .then(crowd[b].partial_cmp(&crowd[a]).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    order.truncate(keep);
    order
}

/// Bounded simulated binary crossover of two parents.
pub fn sbx(
    rng: &mut impl Rng,
    p1: &[f64],
    p2: &[f64],
    lower: &[f64],
    upper: &[f64],
    eta: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    for i in 0..p1.len() {
        if rng.random::<f64>() > 0.5 {
            continue;
        }
        let (x1, x2) = if p1[i] < p2[i] { (p1[i], p2[i]) } else { (p2[i], p1[i]) };
        if (x2 - x1).abs() <= 1e-14 {
            continue;
        }
        let (yl, yu) = (lower[i], upper[i]);
        let u: f64 = rng.random();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let beta_l = 1.0 + 2.0 * (x1 - yl) / (x2 - x1);
        let beta_u = 1.0 + 2.0 * (yu - x2) / (x2 - x1);
        let a = (0.5 * ((x1 + x2) - spread(beta_l) * (x2 - x1))).clamp(yl, yu);
        let b = (0.5 * ((x1 + x2) + spread(beta_u) * (x2 - x1))).clamp(yl, yu);
        if rng.random::<f64>() <= 0.5 {
            c1[i] = b;
            c2[i] = a;
        } else {
            c1[i] = a;
            c2[i] = b;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation in place.
pub fn polynomial_mutation(
    rng: &mut impl Rng,
    x: &mut [f64],
    lower: &[f64],
    upper: &[f64],
    eta: f64,
    probability: f64,
) {
    for i in 0..x.len() {
        if rng.random::<f64>() > probability {
            continue;
        }
        let (yl, yu) = (lower[i], upper[i]);
        let range = yu - yl;
        if range <= 0.0 {
            continue;
        }
        let y = x[i];
        let d1 = (y - yl) / range;
        let d2 = (yu - y) / range;
        let u: f64 = rng.random();
        let p = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            v.powf(p) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(p)
        };
        x[i] = (y + dq * range).clamp(yl, yu);
    }
}

/// Runs the search. `evaluate` maps a decision vector to minimized
/// objectives and must be deterministic.
pub fn nsga2<F>(lower: &[f64], upper: &[f64], settings: &Nsga2Settings, evaluate: F) -> Result<Nsga2Result>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    settings.validate()?;
    if lower.len() != upper.len() || lower.is_empty() || lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::Config("invalid decision bounds".into()));
    }
    let pool = if settings.workers > 0 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(settings.workers)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", settings.workers)))?,
        )
    } else {
        None
    };
    let eval_batch = |xs: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
        let run = || xs.par_iter().map(|x| evaluate(x)).collect::<Result<Vec<_>>>();
        match &pool {
            Some(p) => p.install(run),
            None => run(),
        }
    };

    let n = lower.len();
    let pm = settings.mutation_probability.unwrap_or(1.0 / n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut evaluations = 0;

    let xs: Vec<Vec<f64>> = (0..settings.population)
        .map(|_| (0..n).map(|i| rng.random_range(lower[i]..=upper[i])).collect())
        .collect();
    let fs = eval_batch(&xs)?;
    let mut population: Vec<Individual> = xs
        .into_iter()
        .zip(fs)
        .map(|(x, f)| {
            evaluations += 1;
            Individual {
                x,
                f,
                generation: 0,
                evaluation: evaluations - 1,
            }
        })
        .collect();

    let m = population[0].f.len();
    let mut reference_point = vec![f64::NEG_INFINITY; m];
    let mut best = vec![f64::INFINITY; m];
    for ind in &population {
        for k in 0..m {
            reference_point[k] = reference_point[k].max(ind.f[k]);
            best[k] = best[k].min(ind.f[k]);
        }
    }
    for k in 0..m {
        let span = (reference_point[k] - best[k]).max(reference_point[k].abs() * 1e-6).max(1e-12);
        reference_point[k] += 0.1 * span;
    }
    let mut archive = Archive::new(settings.population, reference_point.clone());
    for ind in &population {
        archive.insert(ind.clone(), |i| &i.f);
    }
    let mut history = vec![hypervolume(&archive.objectives(|i| &i.f), &reference_point)];

    for generation in 1..=settings.generations {
        let points: Vec<Vec<f64>> = population.iter().map(|i| i.f.clone()).collect();
        let (rank, crowd) = rank_and_crowd(&points);
        let better = |a: usize, b: usize| -> usize {
            match rank[a].cmp(&rank[b]) {
                Ordering::Less => a,
                Ordering::Greater => b,
                Ordering::Equal => {
                    if crowd[a] > crowd[b] {
                        a
                    } else if crowd[b] > crowd[a] {
                        b
                    } else {
                        a.min(b)
                    }
                }
            }
        };
        let tournament = |rng: &mut ChaCha8Rng| {
            let a = rng.random_range(0..population.len());
            let b = rng.random_range(0..population.len());
            better(a, b)
        };
        let mut children = Vec::with_capacity(settings.population);
        while children.len() < settings.population {
            let p1 = tournament(&mut rng);
            let p2 = tournament(&mut rng);
            let (mut c1, mut c2) = if rng.random::<f64>() <= settings.crossover_probability {
                sbx(&mut rng, &population[p1].x, &population[p2].x, lower, upper, settings.crossover_eta)
            } else {
                (population[p1].x.clone(), population[p2].x.clone())
            };
            polynomial_mutation(&mut rng, &mut c1, lower, upper, settings.mutation_eta, pm);
            polynomial_mutation(&mut rng, &mut c2, lower, upper, settings.mutation_eta, pm);
            children.push(c1);
            children.push(c2);
        }
        let fs = eval_batch(&children)?;
        let offspring: Vec<Individual> = children
            .into_iter()
            .zip(fs)
            .map(|(x, f)| {
                evaluations += 1;
                Individual {
                    x,
                    f,
                    generation,
                    evaluation: evaluations - 1,
                }
            })
            .collect();
        for ind in &offspring {
            archive.insert(ind.clone(), |i| &i.f);
        }
        history.push(hypervolume(&archive.objectives(|i| &i.f), &reference_point));

        let mut combined = population;
        combined.extend(offspring);
        let points: Vec<Vec<f64>> = combined.iter().map(|i| i.f.clone()).collect();
        let keep = environmental_selection(&points, settings.population);
        population = keep.into_iter().map(|i| combined[i].clone()).collect();
    }

    Ok(Nsga2Result {
        archive: archive.into_members(),
        final_population: population,
        hypervolume_history: history,
        reference_point,
        evaluations,
    })
}
