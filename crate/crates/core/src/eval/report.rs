//! Tab-separated result tables: `method  layer  split  metric  value`.

use super::recon::ReconResult;
use crate::shapeforge::Dataset;

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub layer: String,
    /// Split name, or `split/class` for per-class rows.
    pub split: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn push(&mut self, method: &str, layer: &str, split: &str, metric: &str, value: f64) {
        self.rows.push(ResultRow { method: method.into(), layer: layer.into(), split: split.into(), metric: metric.into(), value });
    }

    /// Values use the shortest representation that parses back to the same `f64`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("method\tlayer\tsplit\tmetric\tvalue\n");
        for r in &self.rows {
            s.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", r.method, r.layer, r.split, r.metric, r.value));
        }
        s
    }

    pub fn find(&self, method: &str, layer: &str, split: &str, metric: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.method == method && r.layer == layer && r.split == split && r.metric == metric).map(|r| r.value)
    }
}

/// Overall plus per-class rows of a reconstruction result.
pub fn recon_rows(table: &mut ResultTable, ds: &Dataset, r: &ReconResult) {
    let split = r.split.name();
    table.push(&r.method, "-", split, "mse_x1000", r.overall);
    for c in &r.per_class {
        table.push(&r.method, "-", &format!("{split}/{}", ds.class_name(c.class_id)), "mse_x1000", c.mse_x1000);
    }
}
