//! Data layer: click-record and timetag files, window binning with
//! dead-time gating, setup files, curve CSVs and the text report.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::characterize::Estimate;
use crate::error::{Error, Result};
use crate::montecarlo::ClickCounts;
use crate::outcome::{DetectorOutcome, OUTCOMES};
use crate::setup::{ChannelTransmissions, DarkCountRates, SetupModel};

/// Timing of the acceptance windows relative to the clock channel, in
/// integer picoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    period: i64,
    width: i64,
    offset: i64,
}

impl WindowSpec {
    pub fn new(period: i64, width: i64, offset: i64) -> Result<Self> {
        if period <= 0 || width <= 0 || width > period {
            return Err(Error::Domain(format!(
                "window spec needs 0 < width <= period, got width {width}, period {period}"
            )));
        }
        Ok(Self { period, width, offset })
    }

    pub fn period(&self) -> i64 {
        self.period
    }

    pub fn width(&self) -> i64 {
        self.width
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Acceptance interval `[lo, hi]` for the window opened by a clock
    /// tag at `clock`.
    fn interval(&self, clock: i64) -> (i64, i64) {
        let center = clock + self.offset;
        (center - self.width / 2, center - self.width / 2 + self.width)
    }
}

/// Timetag channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Clock,
    H,
    A,
    B,
}

impl FromStr for Channel {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "CLOCK" => Ok(Channel::Clock),
            "H" => Ok(Channel::H),
            "A" => Ok(Channel::A),
            "B" => Ok(Channel::B),
            _ => Err(()),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Clock => "CLOCK",
            Channel::H => "H",
            Channel::A => "A",
            Channel::B => "B",
        })
    }
}

/// Book-keeping of the window gating pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GatingStats {
    /// Clock periods seen in the file.
    pub total_windows: u64,
    /// Windows that entered the statistics.
    pub retained_windows: u64,
    /// Windows discarded because a gated detector was dead.
    pub discarded_windows: u64,
    /// Retained windows in which some channel carried more than one tag.
    pub multi_tag_windows: u64,
}

/// Dead times per detector in picoseconds; zero disables gating for
/// that detector. The herald detector is free-running, so its dead time
/// defaults to off.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeadTimes {
    pub a: i64,
    pub b: i64,
    pub h: i64,
}

/// Write one `a,b,h` line per window, grouped by outcome.
pub fn write_click_records<W: Write>(mut w: W, counts: &ClickCounts) -> Result<()> {
    writeln!(w, "a,b,h")?;
    for (outcome, &n) in OUTCOMES.iter().zip(&counts.outcome_counts) {
        let line = format!(
            "{},{},{}",
            u8::from(outcome.a_clicked),
            u8::from(outcome.b_clicked),
            u8::from(outcome.h_clicked)
        );
        for _ in 0..n {
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

pub fn write_click_records_file(path: &Path, counts: &ClickCounts) -> Result<()> {
    write_click_records(BufWriter::new(File::create(path)?), counts)
}

fn parse_bit(field: &str, line: usize) -> Result<bool> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Parse {
            line,
            msg: format!("expected 0 or 1, found {other:?}"),
        }),
    }
}

/// Read a click-record stream into outcome counts. The `a,b,h` header
/// line is optional.
pub fn ingest_click_records<R: BufRead>(r: R) -> Result<ClickCounts> {
    let mut counts = [0u64; 8];
    let mut windows = 0u64;
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || (line_no == 1 && trimmed == "a,b,h") {
            continue;
        }
        let mut fields = trimmed.split(',');
        let mut bit = |name: &str| {
            fields
                .next()
                .ok_or(Error::Parse { line: line_no, msg: format!("missing field {name}") })
                .and_then(|f| parse_bit(f, line_no))
        };
        let a = bit("a")?;
        let b = bit("b")?;
        let h = bit("h")?;
        if fields.next().is_some() {
            return Err(Error::Parse { line: line_no, msg: "too many fields".into() });
        }
        counts[DetectorOutcome::new(a, b, h).index()] += 1;
        windows += 1;
    }
    if windows == 0 {
        return Err(Error::Parse { line: 0, msg: "no click records in file".into() });
    }
    Ok(ClickCounts { n_windows: windows, outcome_counts: counts, seed: 0 })
}

pub fn ingest_click_records_file(path: &Path) -> Result<ClickCounts> {
    ingest_click_records(BufReader::new(File::open(path)?))
}

/// Serialize counts as a timetag stream: the clock ticks every period
/// and each clicked channel carries one tag at the window center.
pub fn write_timetags<W: Write>(mut w: W, counts: &ClickCounts, spec: &WindowSpec) -> Result<()> {
    writeln!(w, "channel,timestamp_ps")?;
    let mut window = 0i64;
    for (outcome, &n) in OUTCOMES.iter().zip(&counts.outcome_counts) {
        for _ in 0..n {
            let clock = window * spec.period();
            writeln!(w, "CLOCK,{clock}")?;
            let t = clock + spec.offset();
            if outcome.h_clicked {
                writeln!(w, "H,{t}")?;
            }
            if outcome.a_clicked {
                writeln!(w, "A,{t}")?;
            }
            if outcome.b_clicked {
                writeln!(w, "B,{t}")?;
            }
            window += 1;
        }
    }
    Ok(())
}

pub fn write_timetags_file(path: &Path, counts: &ClickCounts, spec: &WindowSpec) -> Result<()> {
    write_timetags(BufWriter::new(File::create(path)?), counts, spec)
}

struct ChannelTags {
    tags: Vec<i64>,
    /// cursor for in-window lookup
    next: usize,
}

impl ChannelTags {
    fn new() -> Self {
        Self { tags: Vec::new(), next: 0 }
    }

    /// Number of tags inside `[lo, hi)`, advancing past everything
    /// before `hi`. Windows arrive in clock order, so a single forward
    /// pass suffices.
    fn take_in_window(&mut self, lo: i64, hi: i64) -> u32 {
        while self.next < self.tags.len() && self.tags[self.next] < lo {
            self.next += 1;
        }
        let start = self.next;
        while self.next < self.tags.len() && self.tags[self.next] < hi {
            self.next += 1;
        }
        (self.next - start) as u32
    }

    /// Most recent tag strictly before `t`.
    fn last_before(&self, t: i64) -> Option<i64> {
        let i = self.tags.partition_point(|&x| x < t);
        (i > 0).then(|| self.tags[i - 1])
    }
}

/// Bin a timetag stream into per-window outcome counts.
///
/// A window is defined per clock tag; a detector clicks iff at least
/// one tag on its channel falls inside the acceptance interval. Windows
/// in which a gated detector sits within its dead time of a prior
/// detection are discarded entirely.
pub fn ingest_timetags<R: BufRead>(
    r: R,
    spec: &WindowSpec,
    dead: &DeadTimes,
) -> Result<(ClickCounts, GatingStats)> {
    let mut clock = ChannelTags::new();
    let mut h = ChannelTags::new();
    let mut a = ChannelTags::new();
    let mut b = ChannelTags::new();

    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || (line_no == 1 && trimmed == "channel,timestamp_ps") {
            continue;
        }
        let (chan_str, ts_str) = trimmed.split_once(',').ok_or(Error::Parse {
            line: line_no,
            msg: "expected channel,timestamp_ps".into(),
        })?;
        let chan: Channel = chan_str.trim().parse().map_err(|()| Error::Parse {
            line: line_no,
            msg: format!("unknown channel {:?}", chan_str.trim()),
        })?;
        let ts: i64 = ts_str.trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("invalid timestamp {:?}", ts_str.trim()),
        })?;
        let tags = match chan {
            Channel::Clock => &mut clock,
            Channel::H => &mut h,
            Channel::A => &mut a,
            Channel::B => &mut b,
        };
        if tags.tags.last().is_some_and(|&last| ts < last) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("non-monotonic timestamp {ts} on channel {chan}"),
            });
        }
        tags.tags.push(ts);
    }
    if clock.tags.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no CLOCK tags in file".into() });
    }

    let mut counts = [0u64; 8];
    let mut stats = GatingStats::default();
    for &c in &clock.tags {
        stats.total_windows += 1;
        let (lo, hi) = spec.interval(c);
        let dead_at = |tags: &ChannelTags, dt: i64| {
            dt > 0 && tags.last_before(lo).is_some_and(|t| lo - t < dt)
        };
        if dead_at(&a, dead.a) || dead_at(&b, dead.b) || dead_at(&h, dead.h) {
            stats.discarded_windows += 1;
            // keep the per-channel cursors in step with the clock
            for tags in [&mut h, &mut a, &mut b] {
                tags.take_in_window(lo, hi);
            }
            continue;
        }
        let nh = h.take_in_window(lo, hi);
        let na = a.take_in_window(lo, hi);
        let nb = b.take_in_window(lo, hi);
        if nh > 1 || na > 1 || nb > 1 {
            stats.multi_tag_windows += 1;
        }
        counts[DetectorOutcome::new(na > 0, nb > 0, nh > 0).index()] += 1;
        stats.retained_windows += 1;
    }
    let counts = ClickCounts { n_windows: stats.retained_windows, outcome_counts: counts, seed: 0 };
    if counts.n_windows == 0 {
        return Err(Error::Inconsistency("every window was discarded by dead-time gating".into()));
    }
    Ok((counts, stats))
}

pub fn ingest_timetags_file(
    path: &Path,
    spec: &WindowSpec,
    dead: &DeadTimes,
) -> Result<(ClickCounts, GatingStats)> {
    ingest_timetags(BufReader::new(File::open(path)?), spec, dead)
}

/// Values read from a flat `key = value` setup file. All fields are
/// optional so command-line flags can fill or override them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SetupValues {
    pub eta_h: Option<f64>,
    pub eta_a: Option<f64>,
    pub eta_b: Option<f64>,
    pub d_h: Option<f64>,
    pub d_a: Option<f64>,
    pub d_b: Option<f64>,
    pub c: Option<f64>,
}

impl SetupValues {
    /// Overlay `other` on top of `self`; present values in `other` win.
    pub fn overridden_by(&self, other: &SetupValues) -> SetupValues {
        SetupValues {
            eta_h: other.eta_h.or(self.eta_h),
            eta_a: other.eta_a.or(self.eta_a),
            eta_b: other.eta_b.or(self.eta_b),
            d_h: other.d_h.or(self.d_h),
            d_a: other.d_a.or(self.d_a),
            d_b: other.d_b.or(self.d_b),
            c: other.c.or(self.c),
        }
    }

    /// Dark-count rates; missing values default to zero.
    pub fn darks(&self) -> Result<DarkCountRates> {
        DarkCountRates::new(
            self.d_h.unwrap_or(0.0),
            self.d_a.unwrap_or(0.0),
            self.d_b.unwrap_or(0.0),
        )
    }

    /// Full setup; requires all three transmissions, defaults darks to
    /// zero and `c` to 1.
    pub fn setup_model(&self) -> Result<SetupModel> {
        let missing: Vec<&str> = [
            ("eta_h", self.eta_h),
            ("eta_a", self.eta_a),
            ("eta_b", self.eta_b),
        ]
        .iter()
        .filter_map(|(name, v)| v.is_none().then_some(*name))
        .collect();
        if !missing.is_empty() {
            return Err(Error::Domain(format!(
                "setup is missing required values: {}",
                missing.join(", ")
            )));
        }
        let t = ChannelTransmissions::new(
            self.eta_h.unwrap(),
            self.eta_a.unwrap(),
            self.eta_b.unwrap(),
        )?;
        SetupModel::new(t, self.darks()?, self.c.unwrap_or(1.0))
    }
}

/// Parse a flat setup file: one `key = value` per line, `#` comments.
pub fn parse_setup<R: BufRead>(r: R) -> Result<SetupValues> {
    let mut v = SetupValues::default();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.split('#').next().unwrap_or("").trim();
        if trimmed.is_empty() {
            continue;
        }
        let (key, raw) = trimmed.split_once('=').ok_or(Error::Parse {
            line: line_no,
            msg: "expected key = value".into(),
        })?;
        let value: f64 = raw.trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("invalid number {:?}", raw.trim()),
        })?;
        let slot = match key.trim() {
            "eta_h" => &mut v.eta_h,
            "eta_a" => &mut v.eta_a,
            "eta_b" => &mut v.eta_b,
            "d_h" => &mut v.d_h,
            "d_a" => &mut v.d_a,
            "d_b" => &mut v.d_b,
            "c" => &mut v.c,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unknown setup key {other:?}"),
                })
            }
        };
        *slot = Some(value);
    }
    Ok(v)
}

pub fn parse_setup_file(path: &Path) -> Result<SetupValues> {
    parse_setup(BufReader::new(File::open(path)?))
}

/// Write a `mu,G` curve CSV.
pub fn write_g_curve<W: Write>(mut w: W, rows: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "mu,G")?;
    for (mu, g) in rows {
        writeln!(w, "{mu},{g}")?;
    }
    Ok(())
}

/// Write a `p_H,mu,g2,g2_approx` curve CSV.
pub fn write_g2_curve<W: Write>(mut w: W, rows: &[(f64, f64, f64, f64)]) -> Result<()> {
    writeln!(w, "p_H,mu,g2,g2_approx")?;
    for (ph, mu, g2, approx) in rows {
        writeln!(w, "{ph},{mu},{g2},{approx}")?;
    }
    Ok(())
}

/// Ordered `key: value` text report. Every numeric entry carries its
/// standard error or an explicit `(exact)` marker, so the rendered text
/// is self-describing and byte-for-byte reproducible.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    lines: Vec<(String, String)>,
    warnings: Vec<String>,
}

impl RunReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: &str, value: impl fmt::Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn exact(&mut self, key: &str, value: f64) {
        self.lines.push((key.to_string(), format!("{value} (exact)")));
    }

    pub fn estimate(&mut self, key: &str, e: &Estimate) {
        let rendered = match e.std_err {
            Some(err) => format!("{} +- {err}", e.value),
            None => format!("{} (exact)", e.value),
        };
        self.lines.push((key.to_string(), rendered));
    }

    pub fn warnings(&mut self, warnings: &[String]) {
        self.warnings.extend_from_slice(warnings);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            out.push_str(k);
            out.push_str(": ");
            out.push_str(v);
            out.push('\n');
        }
        for w in &self.warnings {
            out.push_str("warning: ");
            out.push_str(w);
            out.push('\n');
        }
        out
    }
}
