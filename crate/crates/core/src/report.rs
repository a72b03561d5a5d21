//! Machine-readable cluster reports (JSON).

use serde::Serialize;

use crate::agreement::{AgreementReport, Partition, ScanEntry};
use crate::sim::QuasiClusterReport;
use crate::spectral::SpectralData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Theorem1,
    Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub n: usize,
    pub h: Option<usize>,
    pub eigenvalues: Vec<f64>,
    pub required_zero_columns: Vec<usize>,
    pub zero_tolerance: Option<f64>,
    pub agreement_pairs: Vec<[usize; 2]>,
    pub clusters: Partition,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation_time: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ClusterReport {
    pub fn from_agreement(s: &SpectralData, h: Option<usize>, r: &AgreementReport, warnings: Vec<String>) -> Self {
        ClusterReport {
            n: s.n(),
            h,
            eigenvalues: s.eigenvalues().to_vec(),
            required_zero_columns: r.required_zero.clone(),
            zero_tolerance: Some(r.zero_tolerance),
            agreement_pairs: r.pairs.pairs(),
            clusters: r.partition.clone(),
            method: Method::Theorem1,
            gap_ratio: None,
            evaluation_time: None,
            warnings,
        }
    }

    /// Agreement pairs are the within-cluster pairs of the quasi partition.
    pub fn from_quasi(
        s: &SpectralData,
        h: Option<usize>,
        required_zero: &[usize],
        q: &QuasiClusterReport,
        warnings: Vec<String>,
    ) -> Self {
        let mut pairs = Vec::new();
        for c in q.clusters.clusters() {
            for (a, &i) in c.iter().enumerate() {
                for &j in &c[a + 1..] {
                    pairs.push([i, j]);
                }
            }
        }
        pairs.sort_unstable();
        ClusterReport {
            n: s.n(),
            h,
            eigenvalues: s.eigenvalues().to_vec(),
            required_zero_columns: required_zero.to_vec(),
            zero_tolerance: None,
            agreement_pairs: pairs,
            clusters: q.clusters.clone(),
            method: Method::Trajectory,
            gap_ratio: Some(q.gap_ratio),
            evaluation_time: Some(q.evaluation_time),
            warnings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub zero_tolerance: Option<f64>,
    pub method: Method,
    pub partitions: Vec<ScanEntry>,
}
