use serde::{Deserialize, Serialize};

use super::{Estimate, Method, Statistic};
use crate::qstate::PartitionSpec;

/// One line of estimator output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRecord {
    pub statistic: Statistic,
    pub partition: PartitionSpec,
    pub value: f64,
    /// `None` when the error is undefined (too few snapshots).
    pub std_error: Option<f64>,
    pub m: usize,
    pub p: usize,
    pub method: Method,
    pub seed: Option<u64>,
}

impl EstimateRecord {
    pub fn new(estimate: &Estimate, partition: &PartitionSpec, seed: Option<u64>) -> Self {
        Self {
            statistic: estimate.statistic,
            partition: partition.clone(),
            value: estimate.value,
            std_error: estimate.std_error.is_finite().then_some(estimate.std_error),
            m: estimate.m_used,
            p: estimate.p_used,
            method: estimate.method,
            seed,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record fields are serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let e = Estimate {
            statistic: Statistic::P3,
            value: 0.25,
            std_error: 0.01,
            method: Method::UStatistic,
            m_used: 500,
            p_used: 150,
        };
        let part = PartitionSpec::new(vec![1, 2], vec![3]).unwrap();
        let line = EstimateRecord::new(&e, &part, Some(7)).to_json_line();
        assert_eq!(
            line,
            r#"{"statistic":"p3","partition":{"A":[1,2],"B":[3]},"value":0.25,"std_error":0.01,"m":500,"p":150,"method":"u-statistic","seed":7}"#
        );
        let back: EstimateRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back.partition, part);
    }
}
