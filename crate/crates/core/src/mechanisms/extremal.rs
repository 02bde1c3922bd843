//! Reduction of an arbitrary private channel to an extremal one, whose column
//! ratios all lie in `{1, e^eps}`, without changing what it reveals.

use super::channel::{check_ldp, privacy_ratio, ChannelMatrix, MAX_CHANNEL_OUTPUTS};
use crate::error::{Error, Result};
use crate::simplex::PrivacyBudget;

/// Relative slack allowed when checking that a point lies in `[1, e^eps]^k`.
const CUBE_TOLERANCE: f64 = 1e-12;

/// A point of `[1, e^eps]^k` written as a convex combination of cube vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDecomposition {
    pub vertices: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl ConvexDecomposition {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `sum_j weight_j * vertex_j`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let k = self.vertices.first().map_or(0, Vec::len);
        let mut out = vec![0.0; k];
        for (v, &w) in self.vertices.iter().zip(&self.weights) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += w * x;
            }
        }
        out
    }
}

/// Splits `v` coordinate by coordinate, lowest index first: a coordinate
/// strictly inside `(1, e^eps)` turns every partial term into a `1`-term with
/// weight `(e^eps - v_l)/(e^eps - 1)` and an `e^eps`-term with weight
/// `(v_l - 1)/(e^eps - 1)`. Coordinates already at a vertex value are kept.
pub fn convex_vertex_decomposition(
    v: &[f64],
    budget: PrivacyBudget,
) -> Result<ConvexDecomposition> {
    let e = budget.exp_epsilon();
    let snap = 4.0 * f64::EPSILON * e;
    let mut point = Vec::with_capacity(v.len());
    for (index, &value) in v.iter().enumerate() {
        if !(value >= 1.0 - CUBE_TOLERANCE && value <= e * (1.0 + CUBE_TOLERANCE)) {
            return Err(Error::EntryOutOfCube { index, value });
        }
        point.push(value.clamp(1.0, e));
    }

    let mut vertices = vec![point.clone()];
    let mut weights = vec![1.0];
    for (l, &x) in point.iter().enumerate() {
        if (x - 1.0).abs() <= snap || (x - e).abs() <= snap {
            let corner = if (x - 1.0).abs() <= snap { 1.0 } else { e };
            vertices.iter_mut().for_each(|vx| vx[l] = corner);
            continue;
        }
        let low = (e - x) / (e - 1.0);
        let high = (x - 1.0) / (e - 1.0);
        let mut next_vertices = Vec::with_capacity(2 * vertices.len());
        let mut next_weights = Vec::with_capacity(2 * weights.len());
        for (vx, w) in vertices.into_iter().zip(weights) {
            let mut lo = vx.clone();
            lo[l] = 1.0;
            let mut hi = vx;
            hi[l] = e;
            next_vertices.push(lo);
            next_weights.push(w * low);
            next_vertices.push(hi);
            next_weights.push(w * high);
        }
        vertices = next_vertices;
        weights = next_weights;
    }
    let (vertices, weights) = vertices
        .into_iter()
        .zip(weights)
        .filter(|(_, w)| *w > 0.0)
        .unzip();
    Ok(ConvexDecomposition { vertices, weights })
}

/// An extremal channel and the map sending each of its outputs to the output
/// of the original channel it refines.
#[derive(Debug, Clone)]
pub struct Extremalized {
    pub channel: ChannelMatrix,
    pub output_map: Vec<usize>,
}

impl Extremalized {
    /// Row `input` of the extremal channel, merged back onto the original outputs.
    pub fn pushforward_row(&self, input: usize, original_outputs: usize) -> Vec<f64> {
        let mut out = vec![0.0; original_outputs];
        for (y, &q) in self.channel.row(input).iter().enumerate() {
            out[self.output_map[y]] += q;
        }
        out
    }
}

/// Refines every column `j` of `channel` into the columns
/// `Q_j * w_{j,i} * b_i`, where `Q_j` is the column minimum and
/// `sum_i w_{j,i} b_i` is the vertex decomposition of the column divided by
/// `Q_j`. All-zero columns and zero-weight pieces are dropped.
pub fn extremalize(channel: &ChannelMatrix, budget: PrivacyBudget) -> Result<Extremalized> {
    let k = channel.k();
    let size = 2f64.powi(k as i32) * channel.outputs() as f64;
    if size > MAX_CHANNEL_OUTPUTS {
        return Err(Error::AlphabetTooLarge {
            size,
            limit: MAX_CHANNEL_OUTPUTS,
        });
    }
    if !check_ldp(channel, budget) {
        return Err(Error::NotPrivate {
            ratio: privacy_ratio(channel),
            bound: budget.exp_epsilon(),
        });
    }

    let mut columns = Vec::new();
    let mut output_map = Vec::new();
    for j in 0..channel.outputs() {
        let column: Vec<f64> = channel.column(j).collect();
        let floor = column.iter().copied().fold(f64::INFINITY, f64::min);
        if floor == 0.0 {
            // check_ldp passed, so a zero minimum means the whole column is zero.
            continue;
        }
        let normalized: Vec<f64> = column.iter().map(|q| q / floor).collect();
        let decomposition = convex_vertex_decomposition(&normalized, budget)?;
        for (vertex, w) in decomposition.vertices.iter().zip(&decomposition.weights) {
            columns.push(vertex.iter().map(|b| floor * w * b).collect());
            output_map.push(j);
        }
    }
    Ok(Extremalized {
        channel: ChannelMatrix::from_columns(k, columns)?,
        output_map,
    })
}
