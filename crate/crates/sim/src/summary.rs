//! Run summary computed from telemetry rows alone, so it can be recomputed
//! from a CSV file.

use std::fmt;

use agc_core::telemetry::TelemetryFrame;
use serde::Serialize;

/// Head-to-waypoint distance counted as converged, m.
pub const CONVERGED_HEAD_DIST: f64 = 0.01;

/// Averaging window for the final smoothed values, s.
pub const FINAL_WINDOW: f64 = 1.0;

/// Stretch of the run during which one waypoint was active.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub waypoint_id: u64,
    pub t_start: f64,
    pub t_end: f64,
    /// Time from the click until the head stays within
    /// [`CONVERGED_HEAD_DIST`] of the waypoint for the rest of the segment.
    pub convergence_time: Option<f64>,
    /// Smoothed d and alpha averaged over the segment's last [`FINAL_WINDOW`].
    pub final_d: Option<f64>,
    pub final_alpha: Option<f64>,
    pub final_d_true: Option<f64>,
    pub final_alpha_true: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub steps: usize,
    pub duration: f64,
    pub segments: Vec<Segment>,
    /// Largest smoothed red-marker distance from the image center, px.
    pub max_pixel_error: Option<f64>,
    /// Share of steps with both markers in the image.
    pub in_frame_fraction: f64,
    pub commands_sent: usize,
}

fn tail_mean(frames: &[TelemetryFrame], value: fn(&TelemetryFrame) -> Option<f64>) -> Option<f64> {
    let end = frames.last()?.t;
    let vals: Vec<f64> = frames
        .iter()
        .rev()
        .take_while(|f| f.t > end - FINAL_WINDOW)
        .filter_map(value)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn segment(frames: &[TelemetryFrame], id: u64) -> Segment {
    let first = &frames[0];
    let last = &frames[frames.len() - 1];
    let settled_from = frames
        .iter()
        .rposition(|f| f.head_dist.is_none_or(|h| h > CONVERGED_HEAD_DIST))
        .map_or(Some(0), |i| (i + 1 < frames.len()).then_some(i + 1));
    Segment {
        waypoint_id: id,
        t_start: first.t,
        t_end: last.t,
        convergence_time: settled_from.map(|i| frames[i].t - first.t),
        final_d: tail_mean(frames, |f| f.d_smooth),
        final_alpha: tail_mean(frames, |f| f.alpha_smooth),
        final_d_true: last.d_true,
        final_alpha_true: last.alpha_true,
    }
}

pub fn summarize(frames: &[TelemetryFrame]) -> Summary {
    let mut segments = Vec::new();
    let mut start = 0;
    while start < frames.len() {
        let id = frames[start].waypoint_id;
        let len = frames[start..].iter().take_while(|f| f.waypoint_id == id).count();
        if let Some(id) = id {
            segments.push(segment(&frames[start..start + len], id));
        }
        start += len;
    }
    let max_pixel_error = frames
        .iter()
        .filter_map(|f| Some(f.e_x_px?.hypot(f.e_y_px?)))
        .reduce(f64::max);
    let in_frame = frames.iter().filter(|f| f.in_frame).count();
    Summary {
        steps: frames.len(),
        duration: frames.last().map_or(0.0, |f| f.t),
        segments,
        max_pixel_error,
        in_frame_fraction: if frames.is_empty() { 0.0 } else { in_frame as f64 / frames.len() as f64 },
        commands_sent: frames.iter().filter(|f| f.cmd_sent).count(),
    }
}

fn show(v: Option<f64>, scale: f64, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{:.*}", prec, x * scale))
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} steps, {:.3} s, {} commands, in frame {:.1}%, max pixel error {} px",
            self.steps,
            self.duration,
            self.commands_sent,
            100.0 * self.in_frame_fraction,
            show(self.max_pixel_error, 1.0, 1)
        )?;
        for s in &self.segments {
            writeln!(
                f,
                "waypoint {}: t {:.3}..{:.3} s, converged after {} s, final d {} m, final alpha {} deg",
                s.waypoint_id,
                s.t_start,
                s.t_end,
                show(s.convergence_time, 1.0, 3),
                show(s.final_d, 1.0, 4),
                show(s.final_alpha, 180.0 / std::f64::consts::PI, 2),
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: f64, id: Option<u64>, head: Option<f64>) -> TelemetryFrame {
        TelemetryFrame {
            t,
            waypoint_id: id,
            head_dist: head,
            d_smooth: head.map(|h| h + 0.15),
            ..TelemetryFrame::default()
        }
    }

    #[test]
    fn empty_run() {
        let s = summarize(&[]);
        assert_eq!(s.steps, 0);
        assert!(s.segments.is_empty());
        assert_eq!(s.max_pixel_error, None);
    }

    #[test]
    fn segments_split_on_waypoint_change() {
        let frames = [
            frame(0.1, None, None),
            frame(0.2, Some(1), Some(0.5)),
            frame(0.3, Some(1), Some(0.005)),
            frame(0.4, Some(1), Some(0.002)),
            frame(0.5, Some(2), Some(0.4)),
            frame(0.6, Some(2), Some(0.3)),
        ];
        let s = summarize(&frames);
        assert_eq!(s.segments.len(), 2);
        let a = &s.segments[0];
        assert_eq!(a.waypoint_id, 1);
        assert!((a.convergence_time.unwrap() - 0.1).abs() < 1e-12);
        // mean over the trailing window: all three frames fall inside it
        assert!((a.final_d.unwrap() - (0.65 + 0.155 + 0.152) / 3.0).abs() < 1e-12);
        assert_eq!(s.segments[1].convergence_time, None);
    }

    #[test]
    fn converged_from_the_start() {
        let frames = [frame(1.0, Some(3), Some(0.0)), frame(2.0, Some(3), Some(0.0))];
        assert_eq!(summarize(&frames).segments[0].convergence_time, Some(0.0));
    }

    #[test]
    fn pixel_error_is_the_largest_offset() {
        let mut a = frame(0.0, None, None);
        a.e_x_px = Some(3.0);
        a.e_y_px = Some(4.0);
        let mut b = a;
        b.e_x_px = Some(1.0);
        assert_eq!(summarize(&[a, b]).max_pixel_error, Some(5.0));
    }
}
