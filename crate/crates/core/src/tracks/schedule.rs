use super::TrackError;

/// Raw indices of the frames kept after subsampling by `stride`.
pub fn retained_frames(frame_count: usize, stride: usize) -> Result<Vec<usize>, TrackError> {
    if stride == 0 {
        return Err(TrackError::InvalidArgument("stride must be >= 1".into()));
    }
    Ok((0..frame_count).step_by(stride).collect())
}

/// Pairs `(i, j)` of raw frame indices, `i < j`, linking every retained
/// frame with its next `lookahead` retained frames.
pub fn plan_pair_schedule(
    frame_count: usize,
    stride: usize,
    lookahead: usize,
) -> Result<Vec<(usize, usize)>, TrackError> {
    if frame_count < 2 {
        return Err(TrackError::InvalidArgument("need at least two frames".into()));
    }
    let kept = retained_frames(frame_count, stride)?;
    let mut pairs = Vec::new();
    for (a, &i) in kept.iter().enumerate() {
        for &j in kept.iter().skip(a + 1).take(lookahead) {
            pairs.push((i, j));
        }
    }
    Ok(pairs)
}
