//! Graph construction: node states, directed relations and relation
//! attributes for each engine variant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ExerciseSpec, RepSegment};

/// Engine variants: the interaction network, its ablations and the
/// relation-free baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Natural skeleton edges.
    In,
    /// Flattened node attributes through a plain MLP.
    Mlp,
    /// Natural edges with all relation attributes zeroed.
    AttrHidden,
    /// Natural edges with interaction effects zeroed.
    Indep,
    /// Every ordered landmark pair.
    Fc,
    /// Natural edges plus landmark/reference-point edges.
    Gc,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::In,
        Variant::Mlp,
        Variant::AttrHidden,
        Variant::Indep,
        Variant::Fc,
        Variant::Gc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::In => "in",
            Variant::Mlp => "mlp",
            Variant::AttrHidden => "attr-hidden",
            Variant::Indep => "indep",
            Variant::Fc => "fc",
            Variant::Gc => "gc",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::config(format!("unknown engine variant `{s}`")))
    }
}

/// Node-state width: x, y, vx, vy.
pub const STATE_DIM: usize = 4;
/// Relation-attribute width: distance, angle, direction flag.
pub const ATTR_DIM: usize = 3;
/// Relation-network input width: sender state, receiver state, attributes.
pub const RELATION_INPUT: usize = 2 * STATE_DIM + ATTR_DIM;

/// One directed relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub sender: usize,
    pub receiver: usize,
    /// +1 along the stored orientation of the pair, -1 against it.
    pub flag: f64,
}

/// Node and relation layout. Nodes `0..landmarks` are the preset landmarks in
/// order, followed by the two reference points.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub landmarks: usize,
    pub relations: Vec<Relation>,
    pub references: [[f64; 2]; 2],
}

impl Topology {
    pub fn nodes(&self) -> usize {
        self.landmarks + 2
    }

    pub fn edges(&self) -> usize {
        self.relations.len()
    }

    pub fn build(spec: &ExerciseSpec, variant: Variant) -> Topology {
        let k = spec.landmarks.len();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        match variant {
            Variant::Fc => {
                for a in 0..k {
                    for b in a + 1..k {
                        pairs.push((a, b));
                    }
                }
            }
            Variant::Mlp => {}
            _ => {
                for &(a, b) in &spec.edges {
                    let ia = spec.landmark_index(a).expect("preset edges are representative");
                    let ib = spec.landmark_index(b).expect("preset edges are representative");
                    pairs.push((ia, ib));
                }
                if variant == Variant::Gc {
                    // oriented downwards so the pair angle stays clear of the
                    // atan2 branch cut on the horizontal
                    for l in 0..k {
                        pairs.push((k, l));
                        pairs.push((l, k + 1));
                    }
                }
            }
        }
        let mut relations = Vec::with_capacity(2 * pairs.len());
        for (a, b) in pairs {
            relations.push(Relation { sender: a, receiver: b, flag: 1.0 });
            relations.push(Relation { sender: b, receiver: a, flag: -1.0 });
        }
        Topology {
            landmarks: k,
            relations,
            references: spec.reference_points,
        }
    }

    /// Full node-state matrix (landmarks then reference points) from the
    /// landmark states.
    pub fn node_states(&self, landmark_states: &[[f64; 4]]) -> Vec<[f64; 4]> {
        let mut o = landmark_states.to_vec();
        for r in self.references {
            o.push([r[0], r[1], 0.0, 0.0]);
        }
        o
    }

    /// Distance, angle and direction flag per relation. Distance and angle
    /// belong to the joint pair: both are measured along the pair's stored
    /// orientation, so the two directions differ only in the flag.
    pub fn attributes(&self, nodes: &[[f64; 4]], hidden: bool) -> Vec<[f64; 3]> {
        self.relations
            .iter()
            .map(|r| {
                if hidden {
                    return [0.0; 3];
                }
                let (from, to) = if r.flag > 0.0 { (r.sender, r.receiver) } else { (r.receiver, r.sender) };
                let dx = nodes[to][0] - nodes[from][0];
                let dy = nodes[to][1] - nodes[from][1];
                [(dx * dx + dy * dy).sqrt(), dy.atan2(dx), r.flag]
            })
            .collect()
    }
}

/// The interaction network's matrices for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch {
    /// Node states O, one row per node (landmarks, then reference points).
    pub objects: Vec<[f64; 4]>,
    pub relations: Vec<Relation>,
    /// Relation attributes R_a, one row per relation.
    pub attributes: Vec<[f64; 3]>,
    /// Observed next-step velocity per node (zero for reference points).
    pub targets: Vec<[f64; 2]>,
    pub landmarks: usize,
}

impl GraphBatch {
    pub fn nodes(&self) -> usize {
        self.objects.len()
    }

    /// Sender selector R_s, N x E, row-major.
    pub fn sender_matrix(&self) -> Vec<f64> {
        self.selector(|r| r.sender)
    }

    /// Receiver selector R_r, N x E, row-major.
    pub fn receiver_matrix(&self) -> Vec<f64> {
        self.selector(|r| r.receiver)
    }

    fn selector(&self, pick: impl Fn(&Relation) -> usize) -> Vec<f64> {
        let e = self.relations.len();
        let mut m = vec![0.0; self.nodes() * e];
        for (j, r) in self.relations.iter().enumerate() {
            m[pick(r) * e + j] = 1.0;
        }
        m
    }
}

/// Landmark states (x, y, vx, vy) of `segment` at frame `t`.
pub fn landmark_states(segment: &RepSegment, t: usize) -> Vec<[f64; 4]> {
    segment
        .trajectories
        .iter()
        .map(|tr| {
            let p = tr[t];
            let v = if t == 0 { [0.0, 0.0] } else { [p[0] - tr[t - 1][0], p[1] - tr[t - 1][1]] };
            [p[0], p[1], v[0], v[1]]
        })
        .collect()
}

/// Graph of `segment` at frame `t` with next-step velocity targets.
pub fn build_graph(segment: &RepSegment, spec: &ExerciseSpec, t: usize, variant: Variant) -> Result<GraphBatch> {
    if t + 1 >= segment.len() {
        return Err(Error::input(format!(
            "frame {t} has no successor in a rep of {} frames",
            segment.len()
        )));
    }
    if segment.trajectories.len() != spec.landmarks.len() {
        return Err(Error::Shape(format!(
            "segment has {} trajectories, preset {} landmarks",
            segment.trajectories.len(),
            spec.landmarks.len()
        )));
    }
    let topo = Topology::build(spec, variant);
    let objects = topo.node_states(&landmark_states(segment, t));
    let attributes = topo.attributes(&objects, variant == Variant::AttrHidden);
    let mut targets: Vec<[f64; 2]> = landmark_states(segment, t + 1).iter().map(|s| [s[2], s[3]]).collect();
    targets.extend([[0.0; 2]; 2]);
    Ok(GraphBatch {
        objects,
        relations: topo.relations,
        attributes,
        targets,
        landmarks: topo.landmarks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{exercise_preset, Exercise};

    #[test]
    fn two_node_relation_attributes() {
        let topo = Topology {
            landmarks: 2,
            relations: vec![
                Relation { sender: 0, receiver: 1, flag: 1.0 },
                Relation { sender: 1, receiver: 0, flag: -1.0 },
            ],
            references: [[0.5, 0.0], [0.5, 1.0]],
        };
        let nodes = topo.node_states(&[[0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0]]);
        let a = topo.attributes(&nodes, false);
        assert!((a[0][0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a[0][1], 1f64.atan2(1.0));
        assert_eq!(a[1][1], a[0][1]);
        assert_eq!(a[1][0], a[0][0]);
        assert_eq!((a[0][2], a[1][2]), (1.0, -1.0));
    }

    #[test]
    fn edge_counts_per_variant() {
        let spec = exercise_preset(Exercise::Squats);
        let k = spec.landmarks.len();
        assert_eq!(Topology::build(spec, Variant::In).nodes(), 7);
        assert_eq!(Topology::build(spec, Variant::In).edges(), 2 * spec.edges.len());
        assert_eq!(Topology::build(spec, Variant::Fc).edges(), k * (k - 1));
        assert_eq!(Topology::build(spec, Variant::Gc).edges(), 2 * spec.edges.len() + 4 * k);
    }

    #[test]
    fn selectors_have_one_entry_per_column() {
        let spec = exercise_preset(Exercise::Pushups);
        let seg = RepSegment {
            rep_index: 0,
            start_frame: 0,
            end_frame: 2,
            landmarks: spec.landmarks.clone(),
            trajectories: vec![vec![[0.1, 0.2], [0.2, 0.3], [0.3, 0.3]]; 4],
            label: None,
        };
        let g = build_graph(&seg, spec, 1, Variant::Gc).unwrap();
        let e = g.relations.len();
        for m in [g.sender_matrix(), g.receiver_matrix()] {
            for j in 0..e {
                let s: f64 = (0..g.nodes()).map(|n| m[n * e + j]).sum();
                assert_eq!(s, 1.0);
            }
        }
        assert_eq!(g.objects[4], [0.5, 0.0, 0.0, 0.0]);
        assert_eq!(g.objects[5], [0.5, 1.0, 0.0, 0.0]);
        assert!(build_graph(&seg, spec, 2, Variant::In).is_err());
    }
}
