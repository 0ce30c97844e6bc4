//! A single activation cascade: per-user activation times, their
//! discretization into fixed-width windows, and optional referral labels.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SocialGraph;

pub const DEFAULT_WINDOW_MINUTES: f64 = 30.0;

/// Where a user's visit came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferralClass {
    /// Followed a share by another user: strong endogenous.
    Share,
    /// Came from the social platform without a share: potential endogenous.
    Facebook,
    /// Came from an external web site: strong exogenous.
    External,
    Ad,
    Unknown,
}

impl ReferralClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ReferralClass::Share => "share",
            ReferralClass::Facebook => "facebook",
            ReferralClass::External => "external",
            ReferralClass::Ad => "ad",
            ReferralClass::Unknown => "unknown",
        }
    }

    /// Evaluation label: `Some(true)` for exogenous positives, `Some(false)`
    /// for endogenous, `None` for classes left out of the ROC analysis.
    pub fn exogenous_label(self) -> Option<bool> {
        match self {
            ReferralClass::External => Some(true),
            ReferralClass::Share => Some(false),
            _ => None,
        }
    }

    fn from_text(text: &str) -> Self {
        match text.trim().to_ascii_lowercase().as_str() {
            "share" => ReferralClass::Share,
            "facebook" | "fb" => ReferralClass::Facebook,
            "ad" | "ads" => ReferralClass::Ad,
            "" | "unknown" | "none" | "-1" => ReferralClass::Unknown,
            // Anything else names an outside referrer.
            _ => ReferralClass::External,
        }
    }
}

/// One row of the session table. Times are minutes from a reference time;
/// `-1` marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub user_id: u64,
    pub time_login: f64,
    pub time_share: f64,
    pub referrer_id: i64,
    pub referrer_class: String,
    pub friend_count: u64,
    pub choice_id: i64,
}

impl SessionRecord {
    /// A referrer id means the user followed somebody's share.
    pub fn referral(&self) -> ReferralClass {
        if self.referrer_id >= 0 {
            ReferralClass::Share
        } else {
            ReferralClass::from_text(&self.referrer_class)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionTable {
    pub records: Vec<SessionRecord>,
    /// Whether referral columns were present (false for two-column files).
    pub has_referrals: bool,
}

const SESSION_COLUMNS: [&str; 7] = [
    "user_id",
    "time_login",
    "time_share",
    "referrer_id",
    "referrer_class",
    "friend_count",
    "choice_id",
];

/// Reads the seven-column session CSV, or the minimal `user_id,time_login`
/// form.
pub fn load_sessions(path: &Path) -> Result<SessionTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let schema = |message: String| Error::Schema {
        path: path.to_path_buf(),
        message,
    };

    let minimal = column("user_id").is_some() && column("time_login").is_some() && headers.len() == 2;
    let positions: Vec<Option<usize>> = SESSION_COLUMNS.iter().map(|c| column(c)).collect();
    if !minimal {
        if let Some(missing) = SESSION_COLUMNS
            .iter()
            .zip(&positions)
            .find_map(|(name, p)| p.is_none().then_some(*name))
        {
            return Err(schema(format!("missing column `{missing}`")));
        }
    }

    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| positions[k].and_then(|p| row.get(p));
        let parse_err = |name: &str, value: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("column `{name}`: cannot parse `{value}`"),
        };
        fn num<T: std::str::FromStr>(
            raw: Option<&str>,
            default: T,
            name: &str,
            err: &dyn Fn(&str, &str) -> Error,
        ) -> Result<T> {
            match raw {
                None => Ok(default),
                Some(v) => v.parse::<T>().map_err(|_| err(name, v)),
            }
        }
        let record = SessionRecord {
            user_id: num(field(0), 0, SESSION_COLUMNS[0], &parse_err)?,
            time_login: num(field(1), 0.0, SESSION_COLUMNS[1], &parse_err)?,
            time_share: num(field(2), -1.0, SESSION_COLUMNS[2], &parse_err)?,
            referrer_id: num(field(3), -1, SESSION_COLUMNS[3], &parse_err)?,
            referrer_class: field(4).unwrap_or("").to_string(),
            friend_count: num(field(5), 0, SESSION_COLUMNS[5], &parse_err)?,
            choice_id: num(field(6), -1, SESSION_COLUMNS[6], &parse_err)?,
        };
        if !(record.time_login >= 0.0) {
            return Err(parse_err("time_login", &record.time_login.to_string()));
        }
        if !seen.insert(record.user_id) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate user_id {}", record.user_id),
            });
        }
        records.push(record);
    }
    Ok(SessionTable {
        records,
        has_referrals: !minimal,
    })
}

pub fn write_sessions(table: &SessionTable, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{}", SESSION_COLUMNS.join(","))?;
    for r in &table.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.user_id, r.time_login, r.time_share, r.referrer_id, r.referrer_class, r.friend_count, r.choice_id
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Activation times of every user (indexed like the graph) and their window
/// indices. `window(i) == None` means user `i` never activated.
#[derive(Debug, Clone, PartialEq)]
pub struct Cascade {
    activation_time: Vec<f64>,
    window: Vec<Option<usize>>,
    window_width: f64,
    horizon: usize,
    labels: Option<Vec<ReferralClass>>,
}

/// The three disjoint user sets seen by window `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityMasks {
    pub active_before: Vec<bool>,
    pub activated_in: Vec<bool>,
    pub inactive: Vec<bool>,
}

fn horizon_for(times: &[f64], window_width: f64) -> usize {
    let max = times.iter().copied().filter(|t| *t >= 0.0).fold(f64::NAN, f64::max);
    if max.is_nan() {
        1
    } else {
        ((max + 1.0) / window_width).ceil() as usize
    }
}

impl Cascade {
    /// `times[i] < 0` marks a user that never activated. Without an explicit
    /// horizon, `T = ceil((max time + 1) / window_width)`.
    pub fn from_times(times: Vec<f64>, window_width: f64, horizon: Option<usize>) -> Result<Self> {
        if !(window_width > 0.0) || !window_width.is_finite() {
            return Err(Error::invalid(
                "window_width",
                format!("{window_width} is not positive"),
            ));
        }
        let horizon = horizon.unwrap_or_else(|| horizon_for(&times, window_width));
        if horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least one window"));
        }
        let mut window = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            if t < 0.0 {
                window.push(None);
                continue;
            }
            let w = (t / window_width).floor() as usize;
            if !t.is_finite() || w >= horizon {
                return Err(Error::invalid(
                    "activation_time",
                    format!("user {i} activates at {t}, beyond horizon {horizon} x {window_width}"),
                ));
            }
            window.push(Some(w));
        }
        Ok(Cascade {
            activation_time: times,
            window,
            window_width,
            horizon,
            labels: None,
        })
    }

    /// Builds a cascade directly from window indices; activation times are
    /// placed at window starts.
    pub fn from_windows(windows: Vec<Option<usize>>, window_width: f64, horizon: usize) -> Result<Self> {
        let times = windows
            .iter()
            .map(|w| w.map_or(-1.0, |w| w as f64 * window_width))
            .collect();
        Cascade::from_times(times, window_width, Some(horizon))
    }

    pub fn with_labels(mut self, labels: Vec<ReferralClass>) -> Result<Self> {
        if labels.len() != self.n_users() {
            return Err(Error::LengthMismatch {
                what: "referral labels",
                expected: self.n_users(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n_users(&self) -> usize {
        self.window.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn window_width(&self) -> f64 {
        self.window_width
    }

    #[inline]
    pub fn window(&self, i: usize) -> Option<usize> {
        self.window[i]
    }

    pub fn windows(&self) -> &[Option<usize>] {
        &self.window
    }

    pub fn activation_times(&self) -> &[f64] {
        &self.activation_time
    }

    pub fn labels(&self) -> Option<&[ReferralClass]> {
        self.labels.as_deref()
    }

    pub fn n_activated(&self) -> usize {
        self.window.iter().filter(|w| w.is_some()).count()
    }

    /// Users grouped by activation window.
    pub fn users_by_window(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.horizon];
        for (i, w) in self.window.iter().enumerate() {
            if let Some(w) = *w {
                out[w].push(i);
            }
        }
        out
    }

    /// A user counts as active for its peers only from the window after its
    /// own activation window.
    pub fn activity_masks(&self, t: usize) -> Result<ActivityMasks> {
        if t >= self.horizon {
            return Err(Error::WindowOutOfRange {
                window: t,
                horizon: self.horizon,
            });
        }
        let n = self.n_users();
        let mut masks = ActivityMasks {
            active_before: vec![false; n],
            activated_in: vec![false; n],
            inactive: vec![false; n],
        };
        for (i, w) in self.window.iter().enumerate() {
            match *w {
                Some(w) if w < t => masks.active_before[i] = true,
                Some(w) if w == t => masks.activated_in[i] = true,
                _ => masks.inactive[i] = true,
            }
        }
        Ok(masks)
    }

    /// Permutation ordering users by activation time (never-activated last,
    /// ties by index).
    pub fn activation_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n_users()).collect();
        order.sort_by(|&a, &b| {
            let key = |i: usize| {
                let t = self.activation_time[i];
                if t < 0.0 {
                    f64::INFINITY
                } else {
                    t
                }
            };
            key(a).total_cmp(&key(b)).then(a.cmp(&b))
        });
        order
    }

    /// Reindexes users so that new index `k` is old index `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Cascade> {
        if order.len() != self.n_users() {
            return Err(Error::LengthMismatch {
                what: "user order",
                expected: self.n_users(),
                got: order.len(),
            });
        }
        Ok(Cascade {
            activation_time: order.iter().map(|&i| self.activation_time[i]).collect(),
            window: order.iter().map(|&i| self.window[i]).collect(),
            window_width: self.window_width,
            horizon: self.horizon,
            labels: self.labels.as_ref().map(|l| order.iter().map(|&i| l[i]).collect()),
        })
    }
}

/// Discretizes a session table in row order (user `k` is row `k`).
pub fn discretize(sessions: &SessionTable, window_width: f64) -> Result<Cascade> {
    let times = sessions.records.iter().map(|r| r.time_login).collect();
    let cascade = Cascade::from_times(times, window_width, None)?;
    if sessions.has_referrals {
        let labels = sessions.records.iter().map(SessionRecord::referral).collect();
        cascade.with_labels(labels)
    } else {
        Ok(cascade)
    }
}

/// Joins a session table onto a graph: the graph gains isolated nodes for
/// users it does not know, and the cascade is indexed like the graph. Graph
/// users absent from the table never activate.
pub fn align_sessions(
    graph: &SocialGraph,
    sessions: &SessionTable,
    window_width: f64,
    horizon: Option<usize>,
) -> Result<(SocialGraph, Cascade)> {
    let ids: Vec<u64> = sessions.records.iter().map(|r| r.user_id).collect();
    let graph = graph.with_nodes(&ids);
    let n = graph.n_nodes();
    let mut times = vec![-1.0; n];
    let mut labels = vec![ReferralClass::Unknown; n];
    for r in &sessions.records {
        let i = graph
            .index_of(r.user_id)
            .expect("graph extended with every session user");
        times[i] = r.time_login;
        labels[i] = r.referral();
    }
    let mut cascade = Cascade::from_times(times, window_width, horizon)?;
    if sessions.has_referrals {
        cascade = cascade.with_labels(labels)?;
    }
    Ok((graph, cascade))
}

/// Reorders graph and cascade together so internal indices follow activation time.
pub fn sort_by_activation(graph: &SocialGraph, cascade: &Cascade) -> Result<(SocialGraph, Cascade)> {
    let order = cascade.activation_order();
    Ok((graph.permuted(&order)?, cascade.permuted(&order)?))
}
