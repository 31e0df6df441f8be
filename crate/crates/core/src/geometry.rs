//! Render-ready thread polylines and static SVG output.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Action;
use crate::labeling::LabeledEventLog;
use crate::segmentation::{CoverageSeries, Segmentation};
use crate::topicmodel::TopicId;

pub const GEOMETRY_SCHEMA: &str = "provthreads-geometry/1";

// Timestamps are session-relative.
const SESSION_START_MS: u64 = 0;

/// Twelve-color categorical palette; topics take `id % 12`.
pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("session has events but zero duration; the time axis cannot be scaled")]
    DegenerateScale,
    #[error("image dimensions must be positive")]
    InvalidDimensions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Coverage,
    Segments,
}

impl View {
    pub fn as_str(self) -> &'static str {
        match self {
            View::Coverage => "coverage",
            View::Segments => "segments",
        }
    }
}

impl FromStr for View {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coverage" => Ok(View::Coverage),
            "segments" => Ok(View::Segments),
            other => Err(format!("unknown view {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thread {
    pub topic: TopicId,
    /// Segment the thread belongs to; always 0 in the coverage view.
    pub segment_index: usize,
    pub color_index: usize,
    /// `(x_ms, height)` vertices. Height changes happen exactly at the
    /// vertex timestamps (staircase, no interpolation).
    pub polyline: Vec<(u64, usize)>,
}

impl Thread {
    pub fn path_id(&self, view: View) -> String {
        format!("thread-{}-{}-{}", view.as_str(), self.topic, self.segment_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub event_id: String,
    pub x_ms: u64,
    /// Thread height at the event, for placing the icon on its line.
    pub y_height: usize,
    pub topic: TopicId,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionBounds {
    pub start_ms: u64,
    pub end_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreadGeometry {
    pub schema: String,
    pub session_id: String,
    pub view: View,
    pub threads: Vec<Thread>,
    pub markers: Vec<Marker>,
    pub bounds: SessionBounds,
}

impl ThreadGeometry {
    pub fn max_height(&self) -> usize {
        self.threads
            .iter()
            .flat_map(|t| t.polyline.iter().map(|p| p.1))
            .max()
            .unwrap_or(0)
    }

    pub fn total_points(&self) -> usize {
        self.threads.iter().map(|t| t.polyline.len()).sum()
    }
}

/// What to draw: the view follows from the source.
#[derive(Debug, Clone, Copy)]
pub enum GeometrySource<'a> {
    Coverage(&'a CoverageSeries),
    Segments(&'a Segmentation),
}

/// Builds thread polylines and action markers. `log` must be the labeled log
/// the source was computed from.
pub fn thread_geometry(log: &LabeledEventLog, source: GeometrySource<'_>) -> ThreadGeometry {
    let mut threads = Vec::new();
    let mut markers = Vec::new();
    let mut marker = |event_index: usize, x_ms: u64, y_height: usize, topic: TopicId| {
        let ev = &log.events[event_index].event;
        markers.push((
            event_index,
            Marker {
                event_id: ev.event_id.clone(),
                x_ms,
                y_height,
                topic,
                action: ev.action,
            },
        ));
    };
    let view = match source {
        GeometrySource::Coverage(series) => {
            for (k, points) in series.per_topic.iter().enumerate() {
                if points.is_empty() {
                    continue;
                }
                let topic = TopicId(k);
                let mut polyline = Vec::with_capacity(points.len() + 1);
                polyline.push((SESSION_START_MS, 0));
                for p in points {
                    polyline.push((p.timestamp_ms, p.height));
                    marker(p.event_index, p.timestamp_ms, p.height, topic);
                }
                threads.push(Thread {
                    topic,
                    segment_index: 0,
                    color_index: k % PALETTE.len(),
                    polyline,
                });
            }
            View::Coverage
        }
        GeometrySource::Segments(segmentation) => {
            for (s, seg) in segmentation.segments.iter().enumerate() {
                for &topic in &seg.topic_group {
                    let mut polyline = vec![(seg.start_ms, 0)];
                    for ev in seg.events.iter().filter(|e| e.topic == topic) {
                        polyline.push((ev.timestamp_ms, ev.height));
                        marker(ev.event_index, ev.timestamp_ms, ev.height, topic);
                    }
                    threads.push(Thread {
                        topic,
                        segment_index: s,
                        color_index: topic.0 % PALETTE.len(),
                        polyline,
                    });
                }
            }
            View::Segments
        }
    };
    markers.sort_by_key(|(i, _)| *i);
    ThreadGeometry {
        schema: GEOMETRY_SCHEMA.to_string(),
        session_id: log.session_id.clone(),
        view,
        threads,
        markers: markers.into_iter().map(|(_, m)| m).collect(),
        bounds: SessionBounds {
            start_ms: SESSION_START_MS,
            end_ms: log.duration_ms,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvgOptions {
    pub width_px: u32,
    pub height_px: u32,
    pub show_icons: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            width_px: 960,
            height_px: 360,
            show_icons: true,
        }
    }
}

const MARGIN_LEFT: f64 = 48.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 16.0;
const MARGIN_BOTTOM: f64 = 32.0;

fn glyph(action: Action) -> &'static str {
    match action {
        Action::OpenDocument => "O",
        Action::CloseDocument => "X",
        Action::MoveDocument => "M",
        Action::LinkDocuments => "L",
        Action::Search => "S",
        Action::Highlight => "H",
        Action::Note => "N",
        Action::Other => "?",
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct Scale {
    x0: f64,
    x_span: f64,
    plot_w: f64,
    plot_h: f64,
    max_h: f64,
}

impl Scale {
    fn x(&self, ms: u64) -> f64 {
        MARGIN_LEFT + (ms as f64 - self.x0) / self.x_span * self.plot_w
    }

    fn y(&self, h: usize) -> f64 {
        MARGIN_TOP + self.plot_h - h as f64 / self.max_h * self.plot_h
    }
}

/// Renders the geometry as a standalone SVG 1.1 document. Each thread is one
/// `<path>` made of an initial `M` followed by one `H x V y` step per further
/// vertex.
pub fn export_svg(geometry: &ThreadGeometry, options: &SvgOptions) -> Result<String, GeometryError> {
    if options.width_px == 0 || options.height_px == 0 {
        return Err(GeometryError::InvalidDimensions);
    }
    let width = options.width_px as f64;
    let height = options.height_px as f64;
    let plot_w = width - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = height - MARGIN_TOP - MARGIN_BOTTOM;
    if plot_w <= 0.0 || plot_h <= 0.0 {
        return Err(GeometryError::InvalidDimensions);
    }
    let span = geometry.bounds.end_ms.saturating_sub(geometry.bounds.start_ms);
    let has_content = !geometry.threads.is_empty() || !geometry.markers.is_empty();
    if span == 0 && has_content {
        return Err(GeometryError::DegenerateScale);
    }
    let scale = Scale {
        x0: geometry.bounds.start_ms as f64,
        x_span: span.max(1) as f64,
        plot_w,
        plot_h,
        max_h: geometry.max_height().max(1) as f64,
    };
    let view = geometry.view;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        options.width_px, options.height_px, options.width_px, options.height_px
    );
    let _ = writeln!(
        w,
        "<title>{} view of session {}</title>",
        view.as_str(),
        escape(&geometry.session_id)
    );
    let _ = writeln!(
        w,
        r##"<rect class="background" x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
        options.width_px, options.height_px
    );
    let (ax0, ay0) = (MARGIN_LEFT, MARGIN_TOP + plot_h);
    let _ = writeln!(
        w,
        r##"<g class="axes" stroke="#444444" stroke-width="1"><line x1="{ax0:.2}" y1="{ay0:.2}" x2="{:.2}" y2="{ay0:.2}"/><line x1="{ax0:.2}" y1="{ay0:.2}" x2="{ax0:.2}" y2="{MARGIN_TOP:.2}"/></g>"##,
        ax0 + plot_w
    );
    let _ = writeln!(
        w,
        r##"<g class="labels" font-family="sans-serif" font-size="10" fill="#444444"><text x="{ax0:.2}" y="{:.2}">0 s</text><text x="{:.2}" y="{:.2}" text-anchor="end">{} s</text><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text></g>"##,
        ay0 + 14.0,
        ax0 + plot_w,
        ay0 + 14.0,
        span / 1000,
        ax0 - 4.0,
        MARGIN_TOP + 4.0,
        geometry.max_height()
    );

    let _ = writeln!(w, r#"<g class="threads" fill="none" stroke-width="2">"#);
    for thread in &geometry.threads {
        let mut d = String::new();
        for (i, &(x, y)) in thread.polyline.iter().enumerate() {
            if i == 0 {
                let _ = write!(d, "M{:.2} {:.2}", scale.x(x), scale.y(y));
            } else {
                let _ = write!(d, " H{:.2} V{:.2}", scale.x(x), scale.y(y));
            }
        }
        let _ = writeln!(
            w,
            r#"<path id="{}" class="thread topic-{}" stroke="{}" data-topic="{}" data-segment="{}" d="{}"/>"#,
            thread.path_id(view),
            thread.topic,
            PALETTE[thread.color_index % PALETTE.len()],
            thread.topic,
            thread.segment_index,
            d
        );
    }
    let _ = writeln!(w, "</g>");

    if options.show_icons {
        let _ = writeln!(
            w,
            r##"<g class="markers" font-family="sans-serif" font-size="8" text-anchor="middle">"##
        );
        for m in &geometry.markers {
            let _ = writeln!(
                w,
                r##"<g class="marker marker-{}" transform="translate({:.2},{:.2})"><title>{} {} at {} ms</title><circle r="5" fill="#ffffff" stroke="{}"/><text y="3">{}</text></g>"##,
                m.action.as_str(),
                scale.x(m.x_ms),
                scale.y(m.y_height),
                escape(&m.event_id),
                m.action.as_str(),
                m.x_ms,
                PALETTE[m.topic.0 % PALETTE.len()],
                glyph(m.action)
            );
        }
        let _ = writeln!(w, "</g>");
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}
