use super::QueryError;
use crate::metric::{similarity, DistanceOracle, SimilarityBudget};
use crate::model::{Interval, Trajectory, TrajectoryId, TrajectoryStore};
use crate::Scalar;

/// Similarity score ratio `Σ_A Sim(Q,T,s) / Σ_B Sim(Q,T,s)`, recomputing every
/// similarity. Fails with [`QueryError::ZeroReference`] when the reference sum is zero.
pub fn ssr<S: Scalar>(
    result: &[TrajectoryId],
    reference: &[TrajectoryId],
    query: &Trajectory,
    window: Interval,
    store: &TrajectoryStore,
    oracle: &DistanceOracle<S>,
) -> Result<S, QueryError> {
    let sum = |ids: &[TrajectoryId]| -> Result<S, QueryError> {
        let mut total = S::zero();
        for &id in ids {
            let t = store.get(id).ok_or(QueryError::NotInStore(id))?;
            total += similarity(query, t, window, oracle, SimilarityBudget::disabled())?.value;
        }
        Ok(total)
    };
    sum_ratio(sum(result)?, sum(reference)?)
}

pub fn sum_ratio<S: Scalar>(result_sum: S, reference_sum: S) -> Result<S, QueryError> {
    if reference_sum > S::zero() {
        Ok(result_sum / reference_sum)
    } else {
        Err(QueryError::ZeroReference)
    }
}
