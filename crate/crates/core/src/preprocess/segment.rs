use crate::error::{Error, Result};
use crate::model::TimeSeries;

/// One fixed-length piece of a parent series.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub parent_label: String,
    pub start_epoch: f64,
    pub values: Vec<f64>,
    pub segment_index: usize,
    /// True when any sample of the segment is a gap in the parent.
    pub has_gap: bool,
}

/// Result of cutting a series into consecutive equal segments.
#[derive(Debug, Clone)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    pub segment_len: usize,
    /// Trailing samples that did not fill a whole segment.
    pub dropped_tail: usize,
}

/// Cuts `s` into `floor(duration / segment_seconds)` consecutive segments.
pub fn segmentize(s: &TimeSeries, segment_seconds: f64) -> Result<Segmentation> {
    let segment_len = (segment_seconds * s.rate_hz()).round() as usize;
    if segment_len < 2 {
        return Err(Error::InvalidParameter(format!(
            "segment of {segment_seconds} s holds fewer than two samples"
        )));
    }
    if segment_len > s.len() {
        return Err(Error::Insufficient(format!(
            "segment of {segment_seconds} s exceeds series duration {} s",
            s.duration_s()
        )));
    }
    let count = s.len() / segment_len;
    let segments = (0..count)
        .map(|k| {
            let r = k * segment_len..(k + 1) * segment_len;
            Segment {
                parent_label: s.label().to_string(),
                start_epoch: s.time_at(r.start),
                has_gap: s.gaps().intersects(r.clone()),
                values: s.values()[r].to_vec(),
                segment_index: k,
            }
        })
        .collect();
    Ok(Segmentation {
        segments,
        segment_len,
        dropped_tail: s.len() - count * segment_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GapMap;
    use proptest::prelude::*;

    #[test]
    fn one_day_into_twenty_minute_segments() {
        let s = TimeSeries::new(0.0, 1.0, vec![0.0; 86_400], "d").unwrap();
        let seg = segmentize(&s, 1200.0).unwrap();
        assert_eq!(seg.segments.len(), 72);
        assert!(seg.segments.iter().all(|g| g.values.len() == 1200));
        assert_eq!(seg.segments[3].start_epoch, 3600.0);
    }

    #[test]
    fn four_weeks_into_hundred_minute_segments() {
        let s = TimeSeries::new(0.0, 1.0, vec![0.0; 28 * 86_400], "m").unwrap();
        let seg = segmentize(&s, 6000.0).unwrap();
        assert_eq!(seg.segments.len(), 403);
        assert_eq!(seg.dropped_tail, 28 * 86_400 - 403 * 6000);
    }

    #[test]
    fn too_long_segment_is_an_error() {
        let s = TimeSeries::new(0.0, 1.0, vec![0.0; 600], "m").unwrap();
        assert!(matches!(segmentize(&s, 1200.0), Err(Error::Insufficient(_))));
        assert!(segmentize(&s, 1.0).is_err());
    }

    #[test]
    fn gap_segments_are_flagged() {
        let s = TimeSeries::with_gaps(0.0, 1.0, vec![0.0; 100], GapMap::from_ranges([25..26]), "g").unwrap();
        let seg = segmentize(&s, 10.0).unwrap();
        let flagged: Vec<usize> = seg.segments.iter().filter(|g| g.has_gap).map(|g| g.segment_index).collect();
        assert_eq!(flagged, vec![2]);
    }

    proptest! {
        #[test]
        fn sample_count_is_conserved(len in 2usize..5000, seg in 2usize..400) {
            prop_assume!(seg <= len);
            let s = TimeSeries::new(0.0, 1.0, vec![0.0; len], "p").unwrap();
            let out = segmentize(&s, seg as f64).unwrap();
            prop_assert_eq!(out.segments.len() * out.segment_len + out.dropped_tail, len);
        }
    }
}
