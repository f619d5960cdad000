//! In-, out- and total strengths per node-in-layer, per node and per layer.

use ndarray::{Array1, Array2, Axis};

use crate::flows::SupraNetwork;

#[derive(Clone, Debug, PartialEq)]
pub struct StrengthReport {
    /// `N × L`; entry `[i, α]` is the strength of sector `i` in economy `α`.
    pub node_layer_in: Array2<f64>,
    pub node_layer_out: Array2<f64>,
    pub node_layer_tot: Array2<f64>,
    /// Summed over layers, one entry per sector.
    pub node_in: Array1<f64>,
    pub node_out: Array1<f64>,
    pub node_tot: Array1<f64>,
    /// Summed over sectors, one entry per economy.
    pub layer_in: Array1<f64>,
    pub layer_out: Array1<f64>,
    pub layer_tot: Array1<f64>,
}

fn reshape(flat: Vec<f64>, n: usize, l: usize) -> Array2<f64> {
    // flat index is economy-major, so rows of the (L, N) view are layers
    Array2::from_shape_vec((l, n), flat)
        .expect("flat vector of length N·L")
        .reversed_axes()
        .as_standard_layout()
        .into_owned()
}

pub fn strengths(sn: &SupraNetwork) -> StrengthReport {
    let dims = sn.dims();
    let (n, l) = (dims.n_sectors, dims.n_economies);
    let node_layer_in = reshape(sn.w.col_sums(), n, l);
    let node_layer_out = reshape(sn.w.row_sums(), n, l);
    let node_layer_tot = &node_layer_in + &node_layer_out;
    let node_in = node_layer_in.sum_axis(Axis(1));
    let node_out = node_layer_out.sum_axis(Axis(1));
    let layer_in = node_layer_in.sum_axis(Axis(0));
    let layer_out = node_layer_out.sum_axis(Axis(0));
    StrengthReport {
        node_tot: &node_in + &node_out,
        layer_tot: &layer_in + &layer_out,
        node_layer_in,
        node_layer_out,
        node_layer_tot,
        node_in,
        node_out,
        layer_in,
        layer_out,
    }
}
