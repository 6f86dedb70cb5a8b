//! Ratings files to per-user tied rankings, item and user selection, and
//! seeded splits.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::recommend::{hold_out, HeldOutUser, PredictionSplit};
use crate::ranking::{ItemUniverse, TiedRanking};

/// How to read one ratings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormatDescriptor {
    pub delimiter: String,
    pub user_col: usize,
    pub item_col: usize,
    pub rating_col: usize,
    pub header: bool,
    pub min_level: i32,
    pub max_level: i32,
    /// Largest tolerated fraction of malformed lines.
    pub max_error_rate: f64,
}

impl FormatDescriptor {
    /// Tab-separated `user item rating timestamp`, 1 to 5 stars.
    pub fn ml100k() -> Self {
        FormatDescriptor {
            delimiter: "\t".into(),
            user_col: 0,
            item_col: 1,
            rating_col: 2,
            header: false,
            min_level: 1,
            max_level: 5,
            max_error_rate: 0.01,
        }
    }

    /// `user::item::rating::timestamp`, 1 to 5 stars.
    pub fn ml1m() -> Self {
        FormatDescriptor {
            delimiter: "::".into(),
            ..Self::ml100k()
        }
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        if self.delimiter.trim().is_empty() && self.delimiter != "\t" {
            line.split_whitespace().collect()
        } else {
            line.split(self.delimiter.as_str()).collect()
        }
    }
}

/// `ml100k`, `ml1m`, or `csv:key=value;...` with keys `delim` (`tab`,
/// `comma`, `space`, `::` or a literal), `user`, `item`, `rating` (0-based
/// columns), `header`, `min`, `max` and `errors`. Unset keys default to a
/// comma-separated `user,item,rating` file on a 1 to 5 scale.
impl FromStr for FormatDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml100k" => return Ok(Self::ml100k()),
            "ml1m" => return Ok(Self::ml1m()),
            _ => {}
        }
        let spec = s
            .strip_prefix("csv:")
            .or_else(|| (s == "csv").then_some(""))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown format {s:?}")))?;
        let mut d = FormatDescriptor {
            delimiter: ",".into(),
            ..Self::ml100k()
        };
        for kv in spec.split(';').filter(|x| !x.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("format field {kv:?} needs key=value")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::InvalidArgument(format!("format field {k}: {v:?}")))
            };
            match k.trim() {
                "delim" | "delimiter" => {
                    d.delimiter = match v {
                        "tab" => "\t".into(),
                        "comma" => ",".into(),
                        "space" => " ".into(),
                        "semicolon" => ";".into(),
                        other if !other.is_empty() => other.into(),
                        _ => return Err(Error::InvalidArgument("empty delimiter".into())),
                    }
                }
                "user" => d.user_col = num(v)? as usize,
                "item" => d.item_col = num(v)? as usize,
                "rating" => d.rating_col = num(v)? as usize,
                "header" => d.header = matches!(v.trim(), "true" | "1" | "yes"),
                "min" => d.min_level = num(v)? as i32,
                "max" => d.max_level = num(v)? as i32,
                "errors" => {
                    d.max_error_rate = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("format field errors: {v:?}")))?
                }
                other => return Err(Error::InvalidArgument(format!("unknown format field {other:?}"))),
            }
        }
        if d.min_level > d.max_level {
            return Err(Error::InvalidArgument("min level above max level".into()));
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rating {
    pub user: String,
    pub item: String,
    pub level: i32,
}

/// Parsed ratings, one per (user, item), in file order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsTable {
    pub ratings: Vec<Rating>,
    pub min_level: i32,
    pub max_level: i32,
    /// Lines that could not be parsed or were out of scale.
    pub malformed: usize,
    /// Repeated (user, item) pairs; the last occurrence was kept.
    pub duplicates: usize,
    pub lines: usize,
}

/// Orders ids numerically when both parse as integers, else as text.
pub fn compare_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        _ => a.cmp(b),
    }
}

fn parse_level(s: &str) -> Option<i32> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i32>() {
        return Some(v);
    }
    let f: f64 = s.parse().ok()?;
    (f.fract() == 0.0 && f.abs() < 1e9).then_some(f as i32)
}

pub fn parse_ratings(text: &str, format: &FormatDescriptor) -> Result<RatingsTable> {
    let mut ratings: Vec<Rating> = Vec::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    let (mut malformed, mut duplicates, mut lines) = (0usize, 0usize, 0usize);
    let need = format.user_col.max(format.item_col).max(format.rating_col);
    for (n, line) in text.lines().enumerate() {
        if (n == 0 && format.header) || line.trim().is_empty() {
            continue;
        }
        lines += 1;
        let fields = format.split(line.trim_end_matches('\r'));
        if fields.len() <= need {
            malformed += 1;
            continue;
        }
        let (user, item) = (fields[format.user_col].trim(), fields[format.item_col].trim());
        let level = match parse_level(fields[format.rating_col]) {
            Some(l) if (format.min_level..=format.max_level).contains(&l) => l,
            _ => {
                malformed += 1;
                continue;
            }
        };
        if user.is_empty() || item.is_empty() {
            malformed += 1;
            continue;
        }
        match seen.get(&(user.to_string(), item.to_string())) {
            Some(&at) => {
                duplicates += 1;
                ratings[at].level = level;
            }
            None => {
                seen.insert((user.to_string(), item.to_string()), ratings.len());
                ratings.push(Rating {
                    user: user.to_string(),
                    item: item.to_string(),
                    level,
                });
            }
        }
    }
    if lines > 0 && malformed as f64 > format.max_error_rate * lines as f64 {
        return Err(Error::TooManyMalformed {
            bad: malformed,
            total: lines,
            cap: format.max_error_rate,
        });
    }
    Ok(RatingsTable {
        ratings,
        min_level: format.min_level,
        max_level: format.max_level,
        malformed,
        duplicates,
        lines,
    })
}

pub fn load_ratings(path: impl AsRef<Path>, format: &FormatDescriptor) -> Result<RatingsTable> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    // ML-100k's item file is Latin-1; the ratings file is ASCII, but be lenient
    let text = String::from_utf8_lossy(&bytes);
    parse_ratings(&text, format)
}

/// The `top_n` most rated items, most rated first; ties by id.
pub fn select_items(table: &RatingsTable, top_n: usize) -> Vec<String> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in &table.ratings {
        *counts.entry(r.item.as_str()).or_default() += 1;
    }
    let mut items: Vec<(&str, usize)> = counts.into_iter().collect();
    items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| compare_ids(a.0, b.0)));
    items.into_iter().take(top_n).map(|(i, _)| i.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UserSelection {
    /// Every user with at least one rating among the items.
    All,
    /// Users with at least this many ratings among the items.
    MinCount(usize),
    /// The users with the most ratings among the items; ties by id.
    TopByCoverage(usize),
}

/// Selected user ids in ascending id order.
pub fn select_users(table: &RatingsTable, items: &[String], policy: UserSelection) -> Vec<String> {
    let wanted: std::collections::HashSet<&str> = items.iter().map(String::as_str).collect();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in &table.ratings {
        if wanted.contains(r.item.as_str()) {
            *counts.entry(r.user.as_str()).or_default() += 1;
        }
    }
    let mut users: Vec<(&str, usize)> = counts.into_iter().collect();
    match policy {
        UserSelection::All => {}
        UserSelection::MinCount(c) => users.retain(|u| u.1 >= c),
        UserSelection::TopByCoverage(m) => {
            users.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| compare_ids(a.0, b.0)));
            users.truncate(m);
        }
    }
    let mut ids: Vec<String> = users.into_iter().map(|(u, _)| u.to_string()).collect();
    ids.sort_by(|a, b| compare_ids(a, b));
    ids
}

/// Per-user levelled rankings over a labelled item universe.
#[derive(Debug, Clone)]
pub struct RankingSet {
    pub universe: Arc<ItemUniverse>,
    pub users: Vec<String>,
    pub rankings: Vec<TiedRanking>,
    pub min_level: i32,
    pub max_level: i32,
}

/// One group per occupied level, highest level first. Items outside `items`
/// are dropped; users left with nothing are skipped.
pub fn build_rankings(table: &RatingsTable, items: &[String], users: &[String]) -> Result<RankingSet> {
    if table.ratings.is_empty() {
        return Err(Error::InvalidArgument("empty ratings table".into()));
    }
    let universe = ItemUniverse::with_labels(items.iter().cloned())?;
    let user_slot: HashMap<&str, usize> = users.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    let mut per_user: Vec<Vec<(i32, usize)>> = vec![Vec::new(); users.len()];
    for r in &table.ratings {
        if let (Some(&u), Ok(item)) = (user_slot.get(r.user.as_str()), universe.resolve(&r.item)) {
            per_user[u].push((r.level, item));
        }
    }
    let mut out = RankingSet {
        universe: Arc::clone(&universe),
        users: Vec::new(),
        rankings: Vec::new(),
        min_level: table.min_level,
        max_level: table.max_level,
    };
    for (u, mut rated) in per_user.into_iter().enumerate() {
        if rated.is_empty() {
            continue;
        }
        rated.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut levels: Vec<i32> = Vec::new();
        for (level, item) in rated {
            if levels.last() != Some(&level) {
                levels.push(level);
                groups.push(Vec::new());
            }
            groups.last_mut().unwrap().push(item);
        }
        out.rankings.push(TiedRanking::with_levels(&universe, groups, levels)?);
        out.users.push(users[u].clone());
    }
    Ok(out)
}

impl RankingSet {
    /// `user<TAB>levels<TAB>ranking`, one user per line.
    pub fn to_fixture(&self) -> String {
        let mut s = String::new();
        for (u, r) in self.users.iter().zip(&self.rankings) {
            let levels: Vec<String> = r.levels().unwrap_or(&[]).iter().map(i32::to_string).collect();
            writeln!(s, "{u}\t{}\t{r}", levels.join(",")).unwrap();
        }
        s
    }

    pub fn from_fixture(text: &str, universe: &Arc<ItemUniverse>, min_level: i32, max_level: i32) -> Result<Self> {
        let mut out = RankingSet {
            universe: Arc::clone(universe),
            users: Vec::new(),
            rankings: Vec::new(),
            min_level,
            max_level,
        };
        for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let mut parts = line.splitn(3, '\t');
            let (Some(user), Some(levels), Some(ranking)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse(format!("fixture line {line:?}")));
            };
            let r = TiedRanking::parse(ranking, universe)?;
            let r = if levels.is_empty() {
                r
            } else {
                let lv = levels
                    .split(',')
                    .map(|x| x.trim().parse::<i32>().map_err(|e| Error::Parse(e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                TiedRanking::with_levels(universe, r.groups().to_vec(), lv)?
            };
            out.users.push(user.to_string());
            out.rankings.push(r);
        }
        Ok(out)
    }

    /// Rankings without level labels, for fitting.
    pub fn unlevelled(&self) -> Vec<TiedRanking> {
        self.rankings.iter().map(TiedRanking::without_levels).collect()
    }
}

/// A seeded user split with per-user item holdout on the test side.
#[derive(Debug, Clone)]
pub struct Split {
    pub train_users: Vec<String>,
    pub train: Vec<TiedRanking>,
    pub test_users: Vec<String>,
    pub prediction: PredictionSplit,
}

/// Shuffle users with `seed`, send `test_fraction` of them to the test side,
/// and withhold `holdout_fraction` of each test user's items. Test users with
/// fewer than two items stay out of the holdout. Both sides keep ascending
/// user order.
pub fn split(set: &RankingSet, seed: u64, test_fraction: f64, holdout_fraction: f64) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("test fraction {test_fraction}")));
    }
    let m = set.users.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((test_fraction * m as f64).round() as usize).min(m);
    let mut is_test = vec![false; m];
    for &u in &order[..n_test] {
        is_test[u] = true;
    }
    let mut out = Split {
        train_users: Vec::new(),
        train: Vec::new(),
        test_users: Vec::new(),
        prediction: PredictionSplit {
            users: Vec::new(),
            seed,
        },
    };
    for u in 0..m {
        if is_test[u] {
            out.test_users.push(set.users[u].clone());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u as u64 + 1);
            if let Some(h) = hold_out(&set.users[u], &set.rankings[u], holdout_fraction, &mut rng)? {
                out.prediction.users.push(h);
            }
        } else {
            out.train_users.push(set.users[u].clone());
            out.train.push(set.rankings[u].without_levels());
        }
    }
    Ok(out)
}

/// `user<TAB>held items as label=level<TAB>levels<TAB>observed ranking`.
pub fn prediction_split_text(split: &PredictionSplit) -> String {
    let mut s = format!("# seed {}\n", split.seed);
    for HeldOutUser {
        user,
        observed,
        held_out,
    } in &split.users
    {
        let u = observed.universe();
        let held: Vec<String> = held_out.iter().map(|(i, l)| format!("{}={l}", u.label(*i))).collect();
        let levels: Vec<String> = observed.levels().unwrap_or(&[]).iter().map(i32::to_string).collect();
        writeln!(s, "{user}\t{}\t{}\t{observed}", held.join(","), levels.join(",")).unwrap();
    }
    s
}
