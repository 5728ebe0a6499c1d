//! Graph dataset JSON Lines: a header record followed by one graph per line.
//!
//! Header: `{"feature_names":[..],"feature_version":1,"source":"..","counts":{..}}`.
//! Sample: `{"frame_id":..,"match_id":..,"sequence_id":..,"label":..,"gender":..,
//! "nodes":[[..],..],"edges":[[node,neighbor,[sin,cos,dist]],..]}`.
//! Floats are written in shortest round-trip form, so a save/load cycle is
//! bit-exact.

use std::io::Write;
use std::path::Path;

use counter_gnn_core::graph::{
    Edge, GraphDataset, GraphSample, NodeMatrix, EDGE_FEATURES, FEATURE_VERSION,
};
use counter_gnn_core::tracking::Gender;
use serde::{Deserialize, Serialize};

use super::{create, parse_line, read_lines};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub samples: usize,
    pub positive: usize,
    pub women: usize,
    pub men: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub feature_names: Vec<String>,
    pub feature_version: u32,
    #[serde(default)]
    pub source: String,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLine {
    pub frame_id: u64,
    pub match_id: String,
    pub sequence_id: u32,
    pub label: u8,
    pub gender: Gender,
    pub nodes: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize, [f64; EDGE_FEATURES])>,
}

impl SampleLine {
    pub fn from_sample(s: &GraphSample) -> Self {
        SampleLine {
            frame_id: s.frame_id,
            match_id: s.match_id.clone(),
            sequence_id: s.sequence_id,
            label: s.label,
            gender: s.gender,
            nodes: s.nodes.iter_rows().map(<[f64]>::to_vec).collect(),
            edges: s.edges.iter().map(|e| (e.node, e.neighbor, e.features)).collect(),
        }
    }

    pub fn into_sample(self, width: usize) -> counter_gnn_core::Result<GraphSample> {
        let sample = GraphSample {
            nodes: NodeMatrix::from_rows(width, &self.nodes)?,
            edges: self
                .edges
                .into_iter()
                .map(|(node, neighbor, features)| Edge {
                    node,
                    neighbor,
                    features,
                })
                .collect(),
            label: self.label,
            frame_id: self.frame_id,
            match_id: self.match_id,
            sequence_id: self.sequence_id,
            gender: self.gender,
        };
        if sample.label > 1 {
            return Err(counter_gnn_core::Error::InvalidFrame(format!(
                "label must be 0 or 1, got {}",
                sample.label
            )));
        }
        let finite = sample.nodes.as_slice().iter().all(|v| v.is_finite())
            && sample.edges.iter().all(|e| e.features.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(counter_gnn_core::Error::NonFinite("graph features"));
        }
        sample.validate(width)?;
        Ok(sample)
    }
}

pub fn header_of(dataset: &GraphDataset) -> Header {
    Header {
        feature_names: dataset.feature_names.clone(),
        feature_version: dataset.feature_version,
        source: dataset.source.clone(),
        counts: Counts {
            samples: dataset.len(),
            positive: dataset.samples.iter().filter(|s| s.label == 1).count(),
            women: dataset.gender_mix.women,
            men: dataset.gender_mix.men,
        },
    }
}

fn write_line<T: Serialize>(w: &mut impl Write, path: &Path, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *w, value).map_err(|e| Error::format(path, e.to_string()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))
}

pub fn save_dataset(path: &Path, dataset: &GraphDataset) -> Result<()> {
    let mut w = create(path)?;
    write_line(&mut w, path, &header_of(dataset))?;
    for s in &dataset.samples {
        write_line(&mut w, path, &SampleLine::from_sample(s))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: &Path) -> Result<GraphDataset> {
    let mut lines = read_lines(path)?.into_iter();
    let Some((n, text)) = lines.next() else {
        return Err(Error::format(path, "missing dataset header"));
    };
    let header: Header = parse_line(path, n, &text)?;
    if header.feature_version != FEATURE_VERSION {
        return Err(Error::Version {
            path: path.to_path_buf(),
            found: header.feature_version,
            expected: FEATURE_VERSION,
        });
    }
    let width = header.feature_names.len();
    let mut samples = Vec::with_capacity(header.counts.samples.min(1 << 16));
    for (n, text) in lines {
        let line: SampleLine = parse_line(path, n, &text)?;
        samples.push(line.into_sample(width).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n,
            field: None,
            message: e.to_string(),
        })?);
    }
    let dataset = GraphDataset::new(samples, header.feature_names.clone(), header.source.clone())?;
    let found = header_of(&dataset).counts;
    if found != header.counts {
        return Err(Error::format(
            path,
            format!("header counts {:?} do not match contents {:?}", header.counts, found),
        ));
    }
    Ok(dataset)
}
