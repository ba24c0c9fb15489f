//! Learnable physics engine.
//!
//! An interaction network predicts every landmark's next-step velocity from
//! the current node states: a relation network `f_R` maps each directed
//! relation (sender state, receiver state, relation attributes) to an effect
//! vector, effects are summed per receiver, and an object network `f_O` maps
//! each node's state and summed effect to its next velocity. Positions are
//! integrated explicitly. The same module hosts the MLP baseline and the
//! ablation variants.

mod checkpoint;
pub mod gradcheck;
pub mod graph;
pub mod nn;
pub mod optim;
mod rollout;
mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Exercise, ExerciseSpec};

pub use checkpoint::{load_engine, save_engine, ENGINE_FORMAT, ENGINE_VERSION};
pub use gradcheck::{grad_check, GradCheckReport};
pub use graph::{build_graph, GraphBatch, Relation, Topology, Variant};
pub use nn::{DenseNet, Tape};
pub use rollout::{one_step_errors, rollout, rollout_all, RolloutError};
pub use train::{train, TrainConfig, TrainReport};

use graph::{ATTR_DIM, RELATION_INPUT, STATE_DIM};

/// Layer widths and regularization of the engine networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineArch {
    /// Width of the effect vector produced per relation.
    pub effect_dim: usize,
    pub relation_hidden: Vec<usize>,
    pub object_hidden: Vec<usize>,
    /// Hidden layers of the MLP baseline.
    pub mlp_hidden: Vec<usize>,
    pub dropout: f64,
}

impl Default for EngineArch {
    fn default() -> Self {
        EngineArch {
            effect_dim: 50,
            relation_hidden: vec![256; 3],
            object_hidden: vec![256; 4],
            mlp_hidden: vec![256; 3],
            dropout: 0.5,
        }
    }
}

impl EngineArch {
    pub fn relation_sizes(&self) -> Vec<usize> {
        let mut s = vec![RELATION_INPUT];
        s.extend(&self.relation_hidden);
        s.push(self.effect_dim);
        s
    }

    pub fn object_sizes(&self) -> Vec<usize> {
        let mut s = vec![STATE_DIM + self.effect_dim];
        s.extend(&self.object_hidden);
        s.push(2);
        s
    }

    pub fn mlp_sizes(&self, landmarks: usize) -> Vec<usize> {
        let mut s = vec![STATE_DIM * landmarks];
        s.extend(&self.mlp_hidden);
        s.push(2 * landmarks);
        s
    }

    pub fn check(&self) -> Result<()> {
        if self.effect_dim == 0 {
            return Err(Error::config("effect_dim must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout must lie in [0, 1)"));
        }
        let widths = self.relation_hidden.iter().chain(&self.object_hidden).chain(&self.mlp_hidden);
        if widths.clone().any(|&w| w == 0) {
            return Err(Error::config("hidden widths must be positive"));
        }
        Ok(())
    }
}

/// Learned parameters of one engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nets {
    Interaction { relation: DenseNet, object: DenseNet },
    Mlp { net: DenseNet },
}

impl Nets {
    pub fn init<R: Rng>(arch: &EngineArch, variant: Variant, landmarks: usize, rng: &mut R) -> Self {
        match variant {
            Variant::Mlp => Nets::Mlp {
                net: DenseNet::init(&arch.mlp_sizes(landmarks), arch.dropout, rng),
            },
            _ => Nets::Interaction {
                relation: DenseNet::init(&arch.relation_sizes(), arch.dropout, rng),
                object: DenseNet::init(&arch.object_sizes(), arch.dropout, rng),
            },
        }
    }

    pub fn zeros(arch: &EngineArch, variant: Variant, landmarks: usize) -> Self {
        match variant {
            Variant::Mlp => Nets::Mlp {
                net: DenseNet::zeros(&arch.mlp_sizes(landmarks), arch.dropout),
            },
            _ => Nets::Interaction {
                relation: DenseNet::zeros(&arch.relation_sizes(), arch.dropout),
                object: DenseNet::zeros(&arch.object_sizes(), arch.dropout),
            },
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Nets::Interaction { relation, object } => relation.param_count() + object.param_count(),
            Nets::Mlp { net } => net.param_count(),
        }
    }

    /// Copies all parameters into one flat vector (relation net first).
    pub fn flat_params(&self) -> Vec<f64> {
        match self {
            Nets::Interaction { relation, object } => {
                let mut v = relation.params.clone();
                v.extend_from_slice(&object.params);
                v
            }
            Nets::Mlp { net } => net.params.clone(),
        }
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        match self {
            Nets::Interaction { relation, object } => {
                let n = relation.params.len();
                relation.params.copy_from_slice(&flat[..n]);
                object.params.copy_from_slice(&flat[n..]);
            }
            Nets::Mlp { net } => net.params.copy_from_slice(flat),
        }
    }
}

/// A batch of graphs sharing one topology, flattened for the networks.
#[derive(Debug, Clone, Default)]
pub(crate) struct FlatBatch {
    pub graphs: usize,
    /// `graphs * edges` rows of relation-network input.
    pub relation_input: Vec<f64>,
    /// `graphs * landmarks` rows of landmark state.
    pub states: Vec<f64>,
}

impl FlatBatch {
    pub fn push(&mut self, topo: &Topology, nodes: &[[f64; 4]], attributes: &[[f64; 3]]) {
        for (r, a) in topo.relations.iter().zip(attributes) {
            self.relation_input.extend_from_slice(&nodes[r.sender]);
            self.relation_input.extend_from_slice(&nodes[r.receiver]);
            self.relation_input.extend_from_slice(a);
        }
        for s in &nodes[..topo.landmarks] {
            self.states.extend_from_slice(s);
        }
        self.graphs += 1;
    }
}

/// Activations kept for the backward pass of [`run_batch`].
#[derive(Default)]
pub(crate) struct BatchTape {
    relation: Tape,
    object: Tape,
}

/// Runs the networks on a flat batch; returns `graphs * landmarks * 2`
/// velocity predictions (landmark nodes only). With `training`, dropout
/// masks come from `rng` and activations are recorded in `tape`.
pub(crate) fn run_batch<R: Rng>(
    nets: &Nets,
    topo: &Topology,
    variant: Variant,
    batch: &FlatBatch,
    training: Option<(&mut R, &mut BatchTape)>,
) -> Vec<f64> {
    let k = topo.landmarks;
    let g = batch.graphs;
    match nets {
        Nets::Mlp { net } => match training {
            Some((rng, tape)) => net.forward_train(&batch.states, g, Some(rng), &mut tape.object),
            None => net.predict(&batch.states, g),
        },
        Nets::Interaction { relation, object } => {
            let de = relation.output_dim();
            let e = topo.edges();
            let mut training = training;
            let effects = if variant == Variant::Indep || e == 0 {
                None
            } else {
                Some(match training.as_mut() {
                    Some((rng, tape)) => {
                        relation.forward_train(&batch.relation_input, g * e, Some(&mut **rng), &mut tape.relation)
                    }
                    None => relation.predict(&batch.relation_input, g * e),
                })
            };
            let width = STATE_DIM + de;
            let mut obj = vec![0.0; g * k * width];
            for gi in 0..g {
                for n in 0..k {
                    let row = (gi * k + n) * width;
                    obj[row..row + STATE_DIM].copy_from_slice(&batch.states[(gi * k + n) * STATE_DIM..][..STATE_DIM]);
                }
                if let Some(eff) = &effects {
                    for (j, r) in topo.relations.iter().enumerate() {
                        if r.receiver >= k {
                            continue;
                        }
                        let row = (gi * k + r.receiver) * width + STATE_DIM;
                        let src = &eff[(gi * e + j) * de..][..de];
                        for (o, s) in obj[row..row + de].iter_mut().zip(src) {
                            *o += s;
                        }
                    }
                }
            }
            match training {
                Some((rng, tape)) => object.forward_train(&obj, g * k, Some(rng), &mut tape.object),
                None => object.predict(&obj, g * k),
            }
        }
    }
}

/// Backward pass of [`run_batch`]: accumulates into `grad` (flat layout of
/// [`Nets::flat_params`]).
pub(crate) fn backward_batch(
    nets: &Nets,
    topo: &Topology,
    variant: Variant,
    graphs: usize,
    tape: &BatchTape,
    d_out: &[f64],
    grad: &mut [f64],
) {
    match nets {
        Nets::Mlp { net } => {
            net.backward(&tape.object, d_out, grad, false);
        }
        Nets::Interaction { relation, object } => {
            let np = relation.param_count();
            let (g_rel, g_obj) = grad.split_at_mut(np);
            let uses_effects = variant != Variant::Indep && topo.edges() > 0;
            let d_obj = object.backward(&tape.object, d_out, g_obj, uses_effects);
            if let Some(d_obj) = d_obj {
                let k = topo.landmarks;
                let e = topo.edges();
                let de = relation.output_dim();
                let width = STATE_DIM + de;
                let mut d_eff = vec![0.0; graphs * e * de];
                for gi in 0..graphs {
                    for (j, r) in topo.relations.iter().enumerate() {
                        if r.receiver >= k {
                            continue;
                        }
                        let src = &d_obj[(gi * k + r.receiver) * width + STATE_DIM..][..de];
                        d_eff[(gi * e + j) * de..][..de].copy_from_slice(src);
                    }
                }
                relation.backward(&tape.relation, &d_eff, g_rel, false);
            }
        }
    }
}

/// One interaction-network step on an explicit graph, following the matrix
/// form: effects `E = f_R([O R_s; O R_r; R_a])`, aggregated effects
/// `E R_r^T`, predictions `P = f_O([O; E R_r^T])`. Reference-point rows of
/// the result are zero. `dropout_rng` enables training-mode dropout.
pub fn forward<R: Rng>(
    batch: &GraphBatch,
    f_r: &DenseNet,
    f_o: &DenseNet,
    variant: Variant,
    dropout_rng: Option<&mut R>,
) -> Result<Vec<[f64; 2]>> {
    let n = batch.nodes();
    let e = batch.relations.len();
    if f_r.input_dim() != RELATION_INPUT || f_o.input_dim() != STATE_DIM + f_r.output_dim() || f_o.output_dim() != 2 {
        return Err(Error::Shape(format!(
            "networks {:?} / {:?} do not fit relation input {RELATION_INPUT} and state {STATE_DIM}",
            f_r.sizes, f_o.sizes
        )));
    }
    if batch.attributes.len() != e || batch.landmarks + 2 != n {
        return Err(Error::Shape("graph batch rows disagree".into()));
    }
    let mut rng = dropout_rng;
    let de = f_r.output_dim();
    let mut agg = vec![0.0; n * de];
    if variant != Variant::Indep && e > 0 {
        let mut input = Vec::with_capacity(e * RELATION_INPUT);
        for (r, a) in batch.relations.iter().zip(&batch.attributes) {
            input.extend_from_slice(&batch.objects[r.sender]);
            input.extend_from_slice(&batch.objects[r.receiver]);
            if variant == Variant::AttrHidden {
                input.extend_from_slice(&[0.0; ATTR_DIM]);
            } else {
                input.extend_from_slice(a);
            }
        }
        let effects = match rng.as_mut() {
            Some(r) => f_r.forward_train(&input, e, Some(&mut **r), &mut Tape::default()),
            None => f_r.predict(&input, e),
        };
        for (j, r) in batch.relations.iter().enumerate() {
            for d in 0..de {
                agg[r.receiver * de + d] += effects[j * de + d];
            }
        }
    }
    let width = STATE_DIM + de;
    let mut obj = Vec::with_capacity(n * width);
    for i in 0..n {
        obj.extend_from_slice(&batch.objects[i]);
        obj.extend_from_slice(&agg[i * de..(i + 1) * de]);
    }
    let out = match rng {
        Some(r) => f_o.forward_train(&obj, n, Some(r), &mut Tape::default()),
        None => f_o.predict(&obj, n),
    };
    Ok((0..n)
        .map(|i| if i < batch.landmarks { [out[2 * i], out[2 * i + 1]] } else { [0.0, 0.0] })
        .collect())
}

/// A trained (or freshly initialized) engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Engine {
    pub variant: Variant,
    pub exercise: Exercise,
    pub arch: EngineArch,
    pub config: TrainConfig,
    /// Velocities are multiplied by this before entering the networks and
    /// predictions divided by it.
    pub velocity_scale: f64,
    pub nets: Nets,
}

impl Engine {
    /// Engine whose every parameter is zero; predicts zero velocity.
    pub fn zeroed(spec: &ExerciseSpec, variant: Variant, arch: EngineArch) -> Self {
        Engine {
            variant,
            exercise: spec.exercise,
            nets: Nets::zeros(&arch, variant, spec.landmarks.len()),
            arch,
            config: TrainConfig::default(),
            velocity_scale: 1.0,
        }
    }

    pub fn topology(&self, spec: &ExerciseSpec) -> Topology {
        Topology::build(spec, self.variant)
    }

    /// Next-step velocity of every landmark from current landmark states.
    pub fn predict_velocities(&self, topo: &Topology, states: &[[f64; 4]]) -> Vec<[f64; 2]> {
        let mut batch = FlatBatch::default();
        self.push_scaled(&mut batch, topo, states);
        let out = run_batch::<rand_chacha::ChaCha8Rng>(&self.nets, topo, self.variant, &batch, None);
        out.chunks(2)
            .map(|v| [v[0] / self.velocity_scale, v[1] / self.velocity_scale])
            .collect()
    }

    pub(crate) fn push_scaled(&self, batch: &mut FlatBatch, topo: &Topology, states: &[[f64; 4]]) {
        push_scaled(batch, topo, self.variant, self.velocity_scale, states);
    }
}

pub(crate) fn push_scaled(batch: &mut FlatBatch, topo: &Topology, variant: Variant, scale: f64, states: &[[f64; 4]]) {
    let nodes = topo.node_states(states);
    let attributes = topo.attributes(&nodes, variant == Variant::AttrHidden);
    let scaled: Vec<[f64; 4]> = nodes
        .iter()
        .map(|s| [s[0], s[1], s[2] * scale, s[3] * scale])
        .collect();
    batch.push(topo, &scaled, &attributes);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_arch() -> EngineArch {
        EngineArch {
            effect_dim: 3,
            relation_hidden: vec![5, 4],
            object_hidden: vec![6],
            mlp_hidden: vec![5],
            dropout: 0.0,
        }
    }

    fn sample_graph(variant: Variant) -> (GraphBatch, Topology) {
        let spec = crate::model::exercise_preset(Exercise::Squats);
        let topo = Topology::build(spec, variant);
        let states: Vec<[f64; 4]> = (0..5)
            .map(|i| [0.1 * i as f64, 0.3 + 0.05 * i as f64, 0.01 * i as f64, -0.02])
            .collect();
        let objects = topo.node_states(&states);
        let attributes = topo.attributes(&objects, variant == Variant::AttrHidden);
        let batch = GraphBatch {
            objects,
            relations: topo.relations.clone(),
            attributes,
            targets: vec![[0.0; 2]; 7],
            landmarks: 5,
        };
        (batch, topo)
    }

    #[test]
    fn explicit_forward_matches_batched_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let arch = tiny_arch();
        for variant in [Variant::In, Variant::Gc, Variant::Fc, Variant::Indep, Variant::AttrHidden] {
            let nets = Nets::init(&arch, variant, 5, &mut rng);
            let Nets::Interaction { relation, object } = &nets else { unreachable!() };
            let (g, topo) = sample_graph(variant);
            let direct = forward::<ChaCha8Rng>(&g, relation, object, variant, None).unwrap();
            let engine = Engine {
                variant,
                exercise: Exercise::Squats,
                arch: arch.clone(),
                config: TrainConfig::default(),
                velocity_scale: 1.0,
                nets: nets.clone(),
            };
            let states: Vec<[f64; 4]> = g.objects[..5].to_vec();
            let batched = engine.predict_velocities(&topo, &states);
            for i in 0..5 {
                for c in 0..2 {
                    assert!((direct[i][c] - batched[i][c]).abs() < 1e-12, "{variant}");
                }
            }
            assert_eq!(direct[5], [0.0, 0.0]);
        }
    }

    #[test]
    fn batch_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let arch = tiny_arch();
        for variant in [Variant::In, Variant::Gc, Variant::Mlp, Variant::Indep] {
            let mut nets = Nets::init(&arch, variant, 5, &mut rng);
            let topo = Topology::build(crate::model::exercise_preset(Exercise::Squats), variant);
            let mut batch = FlatBatch::default();
            for s in 0..3 {
                let states: Vec<[f64; 4]> = (0..5)
                    .map(|i| [0.1 * i as f64 + 0.01 * s as f64, 0.5 - 0.07 * i as f64, 0.3, -0.2 * s as f64])
                    .collect();
                push_scaled(&mut batch, &topo, variant, 1.0, &states);
            }
            let loss = |nets: &Nets| -> f64 {
                run_batch::<ChaCha8Rng>(nets, &topo, variant, &batch, None)
                    .iter()
                    .map(|v| 0.5 * v * v)
                    .sum()
            };
            let mut tape = BatchTape::default();
            let mut r2 = ChaCha8Rng::seed_from_u64(0);
            let out = run_batch(&nets, &topo, variant, &batch, Some((&mut r2, &mut tape)));
            let mut grad = vec![0.0; nets.param_count()];
            backward_batch(&nets, &topo, variant, batch.graphs, &tape, &out, &mut grad);
            let base = nets.flat_params();
            let mut worst: f64 = 0.0;
            for i in 0..base.len() {
                let mut p = base.clone();
                p[i] += 1e-6;
                nets.set_flat_params(&p);
                let up = loss(&nets);
                p[i] -= 2e-6;
                nets.set_flat_params(&p);
                let down = loss(&nets);
                let fd = (up - down) / 2e-6;
                worst = worst.max((fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-4));
            }
            nets.set_flat_params(&base);
            assert!(worst < 1e-5, "{variant}: {worst}");
        }
    }
}
