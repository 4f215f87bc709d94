use std::collections::{BTreeMap, VecDeque};

use crate::policy::Metric;
use crate::rms::MeasurementReport;
use crate::simcore::SimTime;

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub metric: Metric,
    pub latest: f64,
    pub latest_at: SimTime,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub samples: usize,
}

/// Network-wide aggregate of measurement reports: the latest value per
/// metric plus min/max/mean over a sliding horizon.
#[derive(Clone, Debug)]
pub struct Cmm {
    horizon: SimTime,
    history: BTreeMap<Metric, VecDeque<(SimTime, f64)>>,
}

impl Cmm {
    pub fn new(horizon: SimTime) -> Self {
        Cmm {
            horizon,
            history: BTreeMap::new(),
        }
    }

    pub fn ingest(&mut self, report: &MeasurementReport) {
        for (m, v) in &report.values {
            let h = self.history.entry(m.clone()).or_default();
            h.push_back((report.at, *v));
            while h
                .front()
                .is_some_and(|(t, _)| report.at.saturating_sub(*t) > self.horizon)
            {
                h.pop_front();
            }
        }
    }

    pub fn latest(&self, m: &Metric) -> Option<f64> {
        self.history.get(m).and_then(|h| h.back()).map(|(_, v)| *v)
    }

    /// One row per metric, in metric order.
    pub fn summary(&self) -> Vec<SummaryRow> {
        self.history
            .iter()
            .filter_map(|(m, h)| {
                let &(latest_at, latest) = h.back()?;
                let vals = h.iter().map(|(_, v)| *v);
                Some(SummaryRow {
                    metric: m.clone(),
                    latest,
                    latest_at,
                    min: vals.clone().fold(f64::INFINITY, f64::min),
                    max: vals.clone().fold(f64::NEG_INFINITY, f64::max),
                    mean: vals.sum::<f64>() / h.len() as f64,
                    samples: h.len(),
                })
            })
            .collect()
    }
}

pub fn cmm_aggregate<'a>(
    reports: impl IntoIterator<Item = &'a MeasurementReport>,
    horizon: SimTime,
) -> Vec<SummaryRow> {
    let mut cmm = Cmm::new(horizon);
    for r in reports {
        cmm.ingest(r);
    }
    cmm.summary()
}
