//! Blink segmentation, padding, and data-loss accounting.

use thiserror::Error;

use crate::trace::GazeRun;

/// Default padding around blink segments, in samples (~33 ms at 60 Hz).
/// Trackers report garbage positions at blink margins.
pub const DEFAULT_BLINK_PAD: usize = 2;

/// Per-sample validity after blink padding, with the padded segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityMask {
    pub flags: Vec<bool>,
    /// Half-open (start, end) index ranges covering padded blinks.
    pub blink_segments: Vec<(usize, usize)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PreprocessError {
    #[error("run has no samples")]
    EmptyRun,
    #[error("mask has no flags")]
    EmptyMask,
}

/// Finds contiguous invalid spans, pads each side by `pad_samples`, and
/// merges overlapping segments.
pub fn mask_blinks(run: &GazeRun, pad_samples: usize) -> Result<ValidityMask, PreprocessError> {
    let n = run.samples.len();
    if n == 0 {
        return Err(PreprocessError::EmptyRun);
    }
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if !run.samples[i].valid {
            let start = i;
            while i < n && !run.samples[i].valid {
                i += 1;
            }
            let padded = (start.saturating_sub(pad_samples), (i + pad_samples).min(n));
            match segments.last_mut() {
                Some(last) if padded.0 <= last.1 => last.1 = padded.1,
                _ => segments.push(padded),
            }
        } else {
            i += 1;
        }
    }
    let mut flags = vec![true; n];
    for &(s, e) in &segments {
        for f in &mut flags[s..e] {
            *f = false;
        }
    }
    Ok(ValidityMask { flags, blink_segments: segments })
}

/// Percentage of samples lost to padded blinks and tracking dropouts.
pub fn blink_loss_percent(mask: &ValidityMask) -> Result<f64, PreprocessError> {
    if mask.flags.is_empty() {
        return Err(PreprocessError::EmptyMask);
    }
    let lost = mask.flags.iter().filter(|f| !**f).count();
    Ok(100.0 * lost as f64 / mask.flags.len() as f64)
}
