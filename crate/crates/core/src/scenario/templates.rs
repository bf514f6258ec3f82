//! Task-graph templates.
//!
//! All cycle counts and data volumes here are synthetic placeholders chosen
//! to give a mix of compute-heavy and transfer-heavy components. They are not
//! measurements of any real application.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::taskgraph::{validate, Component, Edge, RawTaskGraph, TaskGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateName {
    FaceLike,
    QrLike,
    LayeredRandom,
}

impl TemplateName {
    pub const ALL: [TemplateName; 3] = [TemplateName::FaceLike, TemplateName::QrLike, TemplateName::LayeredRandom];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::FaceLike => "face_like",
            TemplateName::QrLike => "qr_like",
            TemplateName::LayeredRandom => "layered_random",
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ScenarioError::UnknownTemplate(s.to_string()))
    }
}

// (label, cycles)
const FACE_NODES: [(&str, f64); 7] = [
    ("capture", 0.1e9),
    ("detect", 0.8e9),
    ("align", 0.4e9),
    ("features", 1.2e9),
    ("landmarks", 0.5e9),
    ("match", 0.9e9),
    ("output", 0.05e9),
];

// (src, dst, bits)
const FACE_EDGES: [(usize, usize, f64); 7] = [
    (0, 1, 2.0e6),
    (1, 2, 5.0e5),
    (2, 3, 2.0e5),
    (1, 4, 5.0e5),
    (3, 5, 5.0e4),
    (4, 5, 2.0e4),
    (5, 6, 1.0e3),
];

const QR_NODES: [(&str, f64); 8] = [
    ("capture", 0.05e9),
    ("preprocess", 0.3e9),
    ("finder", 0.6e9),
    ("binarize", 0.4e9),
    ("sample_grid", 0.5e9),
    ("decode", 0.9e9),
    ("correct", 0.3e9),
    ("output", 0.02e9),
];

const QR_EDGES: [(usize, usize, f64); 10] = [
    (0, 1, 4.0e6),
    (1, 2, 2.0e6),
    (1, 3, 2.0e6),
    (1, 4, 2.0e6),
    (2, 5, 2.0e5),
    (3, 5, 2.0e5),
    (4, 5, 2.0e5),
    (5, 6, 1.0e4),
    (6, 7, 1.0e3),
    (0, 7, 1.0e3),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplateParams {
    /// Every fixed-template weight is scaled by an independent draw from
    /// `U[1 - jitter, 1 + jitter]`.
    pub jitter: f64,
    /// Layer count for `layered_random`.
    pub layers: usize,
    /// Maximum components per layer for `layered_random`.
    pub width: usize,
    /// Probability of each extra edge between adjacent layers.
    pub edge_prob: f64,
    pub cycles_range: (f64, f64),
    pub bits_range: (f64, f64),
}

impl Default for TemplateParams {
    fn default() -> Self {
        TemplateParams {
            jitter: 0.25,
            layers: 4,
            width: 3,
            edge_prob: 0.4,
            cycles_range: (1e8, 1e9),
            bits_range: (1e4, 2e6),
        }
    }
}

impl TemplateParams {
    pub(crate) fn check(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(format!("jitter {} must lie in [0, 1)", self.jitter));
        }
        if self.layers == 0 || self.width == 0 {
            return Err("layered graphs need at least one layer of width one".into());
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(format!("edge probability {} must lie in [0, 1]", self.edge_prob));
        }
        for (name, (lo, hi)) in [("cycles", self.cycles_range), ("bits", self.bits_range)] {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                return Err(format!("{name} range [{lo}, {hi}] is not a valid interval"));
            }
        }
        Ok(())
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi { lo } else { rng.gen_range(lo..hi) }
}

fn fixed<R: Rng>(nodes: &[(&str, f64)], edges: &[(usize, usize, f64)], jitter: f64, rng: &mut R) -> RawTaskGraph {
    let mut scale = |w: f64| if jitter == 0.0 { w } else { w * rng.gen_range(1.0 - jitter..1.0 + jitter) };
    let components = nodes
        .iter()
        .enumerate()
        .map(|(id, &(label, cycles))| Component { id, cycles: scale(cycles), label: Some(label.to_string()) })
        .collect();
    let edges = edges.iter().map(|&(src, dst, bits)| Edge { src, dst, bits: scale(bits) }).collect();
    RawTaskGraph { components, edges, output: nodes.len() - 1 }
}

fn layered<R: Rng>(p: &TemplateParams, rng: &mut R) -> RawTaskGraph {
    let mut layers: Vec<Vec<usize>> = Vec::with_capacity(p.layers + 1);
    let mut next = 0;
    for _ in 0..p.layers {
        let size = rng.gen_range(1..=p.width);
        layers.push((next..next + size).collect());
        next += size;
    }
    if layers.last().is_some_and(|l| l.len() > 1) {
        layers.push(vec![next]);
        next += 1;
    }
    let components = (0..next)
        .map(|id| Component { id, cycles: uniform(rng, p.cycles_range), label: None })
        .collect();
    let mut edges = Vec::new();
    for pair in layers.windows(2) {
        let (from, to) = (&pair[0], &pair[1]);
        let mut linked = vec![false; from.len()];
        for &dst in to {
            let anchor = rng.gen_range(0..from.len());
            for (a, &src) in from.iter().enumerate() {
                if a == anchor || rng.gen_bool(p.edge_prob) {
                    linked[a] = true;
                    edges.push(Edge { src, dst, bits: uniform(rng, p.bits_range) });
                }
            }
        }
        for (a, &src) in from.iter().enumerate() {
            if !linked[a] {
                let dst = to[rng.gen_range(0..to.len())];
                edges.push(Edge { src, dst, bits: uniform(rng, p.bits_range) });
            }
        }
    }
    RawTaskGraph { components, edges, output: next - 1 }
}

pub(crate) fn template_from_rng<R: Rng>(
    name: TemplateName,
    params: &TemplateParams,
    rng: &mut R,
) -> Result<TaskGraph, ScenarioError> {
    params.check().map_err(ScenarioError::InvalidConfig)?;
    let raw = match name {
        TemplateName::FaceLike => fixed(&FACE_NODES, &FACE_EDGES, params.jitter, rng),
        TemplateName::QrLike => fixed(&QR_NODES, &QR_EDGES, params.jitter, rng),
        TemplateName::LayeredRandom => layered(params, rng),
    };
    validate(raw).map_err(|e| ScenarioError::InvariantViolation(format!("template {name}: {e}")))
}

/// Builds a graph from a named template with its own seeded stream.
pub fn graph_template(name: &str, params: &TemplateParams, seed: u64) -> Result<TaskGraph, ScenarioError> {
    let name: TemplateName = name.parse()?;
    template_from_rng(name, params, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskgraph::topo_sort;

    #[test]
    fn every_template_validates() {
        for name in TemplateName::ALL {
            for seed in 0..50 {
                let g = graph_template(name.as_str(), &TemplateParams::default(), seed).unwrap();
                assert_eq!(topo_sort(&g).as_slice().len(), g.len());
                assert_eq!(*topo_sort(&g).as_slice().last().unwrap(), g.output());
            }
        }
    }

    #[test]
    fn fixed_shapes() {
        let p = TemplateParams { jitter: 0.0, ..TemplateParams::default() };
        let face = graph_template("face_like", &p, 0).unwrap();
        assert_eq!(face.len(), 7);
        assert_eq!(face.cycles(3), 1.2e9);
        let qr = graph_template("qr_like", &p, 0).unwrap();
        assert_eq!(qr.len(), 8);
        assert_eq!(qr.out_edges(1).len(), 3);
        assert_eq!(qr.in_edges(5).len(), 3);
    }

    #[test]
    fn single_layer_single_node() {
        let p = TemplateParams { layers: 1, width: 1, ..TemplateParams::default() };
        let g = graph_template("layered_random", &p, 9).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn seeded_replay() {
        let p = TemplateParams { layers: 6, width: 4, ..TemplateParams::default() };
        for name in TemplateName::ALL {
            let a = graph_template(name.as_str(), &p, 42).unwrap();
            let b = graph_template(name.as_str(), &p, 42).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            graph_template("video_like", &TemplateParams::default(), 0),
            Err(ScenarioError::UnknownTemplate(_))
        ));
    }

    #[test]
    fn jitter_stays_in_band() {
        let g = graph_template("face_like", &TemplateParams::default(), 5).unwrap();
        for (i, &(_, c)) in FACE_NODES.iter().enumerate() {
            let r = g.cycles(i) / c;
            assert!((0.75..1.25).contains(&r), "{r}");
        }
    }
}
