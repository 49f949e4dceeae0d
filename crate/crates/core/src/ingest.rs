//! Parsing, validation and cleaning of roll-call vote records.
//!
//! Input is either a trio of CSV files (`votes.csv`, `voters.csv`,
//! `bills.csv`) or a single JSON document with the same fields. Votes are
//! ternary; a missing (voter, bill) pair is the same thing as an explicit
//! not-voting record.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DATE_FMT: &str = "%Y-%m-%d";

/// One ternary ballot preference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VoteValue {
    Yes,
    No,
    NotVoting,
}

impl VoteValue {
    /// Case-insensitive parse. Accepts the Italian source terms
    /// ("Favorevole", "Contrario", "Assente") and the canonical short
    /// forms written by [`VoteDataset::write_csv`].
    pub fn parse(s: &str) -> Option<VoteValue> {
        match s.trim().to_ascii_lowercase().as_str() {
            "favorevole" | "yes" => Some(VoteValue::Yes),
            "contrario" | "no" => Some(VoteValue::No),
            "assente" | "nv" | "notvoting" | "not_voting" => Some(VoteValue::NotVoting),
            _ => None,
        }
    }

    /// Ternary encoding: +1 for yes, -1 for no, 0 for not voting.
    pub fn encoded(self) -> i8 {
        match self {
            VoteValue::Yes => 1,
            VoteValue::No => -1,
            VoteValue::NotVoting => 0,
        }
    }

    /// Canonical serialization form.
    pub fn as_str(self) -> &'static str {
        match self {
            VoteValue::Yes => "yes",
            VoteValue::No => "no",
            VoteValue::NotVoting => "nv",
        }
    }
}

impl fmt::Display for VoteValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Voter {
    pub id: String,
    pub group: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bill {
    pub id: String,
    pub date: NaiveDate,
    pub description: String,
    pub secret_ballot: bool,
}

/// Per-voter group index into the dataset's group list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    indices: Vec<usize>,
    group_ids: Vec<String>,
}

impl GroupAssignment {
    /// Assemble from explicit per-sample indices into `group_ids`.
    pub fn new(indices: Vec<usize>, group_ids: Vec<String>) -> Result<GroupAssignment> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= group_ids.len()) {
            return Err(Error::InvalidParameter {
                reason: format!(
                    "group index {bad} out of range for {} groups",
                    group_ids.len()
                ),
            });
        }
        Ok(GroupAssignment { indices, group_ids })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn group_ids(&self) -> &[String] {
        &self.group_ids
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Counts of what `clean_dataset` removed, per rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    /// Bills removed because they were voted in a secret ballot.
    pub secret_bills: usize,
    /// Voters removed because every retained ballot of theirs was not-voting.
    pub inactive_voters: usize,
    /// Bills removed because every retained voter produced the same encoded value.
    pub constant_bills: usize,
    /// Number of sweeps until the removal rules reached a fixed point.
    pub passes: usize,
}

/// A validated roll-call dataset: voters with nominal group labels, bills,
/// and a dense ternary ballot grid (missing pairs are not-voting).
#[derive(Debug, Clone, PartialEq)]
pub struct VoteDataset {
    voters: Vec<Voter>,
    bills: Vec<Bill>,
    // Row-major m*n grid, index = voter_idx * n_bills + bill_idx.
    grid: Vec<VoteValue>,
    groups: Vec<String>,
}

impl VoteDataset {
    /// Build a dataset from explicit (voter, bill, vote) triples, checking
    /// every structural invariant. Pairs not mentioned default to not-voting.
    pub fn new(
        voters: Vec<Voter>,
        bills: Vec<Bill>,
        votes: impl IntoIterator<Item = (String, String, VoteValue)>,
    ) -> Result<VoteDataset> {
        let voter_index = unique_index(voters.iter().map(|v| v.id.as_str()), "voter")?;
        let bill_index = unique_index(bills.iter().map(|b| b.id.as_str()), "bill")?;

        let n = bills.len();
        let mut grid = vec![VoteValue::NotVoting; voters.len() * n];
        let mut seen = vec![false; voters.len() * n];
        for (voter_id, bill_id, value) in votes {
            let vi = *voter_index
                .get(voter_id.as_str())
                .ok_or_else(|| Error::MalformedRecord {
                    context: "votes".into(),
                    reason: format!("vote references unknown voter {voter_id:?}"),
                })?;
            let bi = *bill_index
                .get(bill_id.as_str())
                .ok_or_else(|| Error::MalformedRecord {
                    context: "votes".into(),
                    reason: format!("vote references unknown bill {bill_id:?}"),
                })?;
            let cell = vi * n + bi;
            if seen[cell] {
                return Err(Error::DuplicateVote {
                    voter: voter_id,
                    bill: bill_id,
                });
            }
            seen[cell] = true;
            grid[cell] = value;
        }

        Self::from_dense(voters, bills, grid)
    }

    /// Build directly from a dense grid in voter-major order.
    pub fn from_dense(
        voters: Vec<Voter>,
        bills: Vec<Bill>,
        grid: Vec<VoteValue>,
    ) -> Result<VoteDataset> {
        if grid.len() != voters.len() * bills.len() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "vote grid has {} cells for {} voters x {} bills",
                    grid.len(),
                    voters.len(),
                    bills.len()
                ),
            });
        }
        unique_index(voters.iter().map(|v| v.id.as_str()), "voter")?;
        unique_index(bills.iter().map(|b| b.id.as_str()), "bill")?;
        for v in &voters {
            if v.group.trim().is_empty() {
                return Err(Error::UnknownGroup {
                    group: v.group.clone(),
                });
            }
        }

        let groups = groups_in_order(&voters);
        if groups.len() < 2 {
            return Err(Error::TooFewGroups {
                found: groups.len(),
            });
        }

        Ok(VoteDataset {
            voters,
            bills,
            grid,
            groups,
        })
    }

    pub fn voters(&self) -> &[Voter] {
        &self.voters
    }

    pub fn bills(&self) -> &[Bill] {
        &self.bills
    }

    /// Group ids in order of first appearance over the voter list.
    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn n_voters(&self) -> usize {
        self.voters.len()
    }

    pub fn n_bills(&self) -> usize {
        self.bills.len()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn vote(&self, voter_idx: usize, bill_idx: usize) -> VoteValue {
        self.grid[voter_idx * self.bills.len() + bill_idx]
    }

    /// Per-voter group indices into [`VoteDataset::groups`].
    pub fn group_assignment(&self) -> GroupAssignment {
        let pos: HashMap<&str, usize> = self
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| (g.as_str(), i))
            .collect();
        GroupAssignment {
            indices: self.voters.iter().map(|v| pos[v.group.as_str()]).collect(),
            group_ids: self.groups.clone(),
        }
    }

    /// Relabel every voter in a group smaller than `min_size` to `target`.
    /// Mirrors folding minor parties into a catch-all class.
    pub fn merge_small_groups(&self, min_size: usize, target: &str) -> Result<VoteDataset> {
        if !self.groups.iter().any(|g| g == target) {
            return Err(Error::UnknownGroup {
                group: target.to_string(),
            });
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for v in &self.voters {
            *counts.entry(v.group.as_str()).or_default() += 1;
        }
        let small: Vec<String> = self
            .groups
            .iter()
            .filter(|g| g.as_str() != target && counts[g.as_str()] < min_size)
            .cloned()
            .collect();
        let voters = self
            .voters
            .iter()
            .map(|v| Voter {
                id: v.id.clone(),
                group: if small.contains(&v.group) {
                    target.to_string()
                } else {
                    v.group.clone()
                },
            })
            .collect();
        VoteDataset::from_dense(voters, self.bills.clone(), self.grid.clone())
    }

    /// Serialize as the documented three-file CSV schema into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("voters.csv"))?;
        w.write_record(["voter_id", "group"])?;
        for v in &self.voters {
            w.write_record([v.id.as_str(), v.group.as_str()])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("bills.csv"))?;
        w.write_record(["bill_id", "date", "description", "secret"])?;
        for b in &self.bills {
            w.write_record([
                b.id.as_str(),
                &b.date.format(DATE_FMT).to_string(),
                b.description.as_str(),
                if b.secret_ballot { "1" } else { "0" },
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("votes.csv"))?;
        w.write_record(["voter_id", "bill_id", "vote"])?;
        for (vi, v) in self.voters.iter().enumerate() {
            for (bi, b) in self.bills.iter().enumerate() {
                let val = self.vote(vi, bi);
                if val != VoteValue::NotVoting {
                    w.write_record([v.id.as_str(), b.id.as_str(), val.as_str()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Serialize as the single-document JSON schema.
    pub fn to_json(&self) -> JsonDataset {
        JsonDataset {
            voters: self
                .voters
                .iter()
                .map(|v| JsonVoter {
                    voter_id: v.id.clone(),
                    group: v.group.clone(),
                })
                .collect(),
            bills: self
                .bills
                .iter()
                .map(|b| JsonBill {
                    bill_id: b.id.clone(),
                    date: b.date.format(DATE_FMT).to_string(),
                    description: b.description.clone(),
                    secret: b.secret_ballot,
                })
                .collect(),
            votes: self
                .voters
                .iter()
                .enumerate()
                .flat_map(|(vi, v)| {
                    self.bills.iter().enumerate().filter_map(move |(bi, b)| {
                        let val = self.vote(vi, bi);
                        (val != VoteValue::NotVoting).then(|| JsonVote {
                            voter_id: v.id.clone(),
                            bill_id: b.id.clone(),
                            vote: val.as_str().to_string(),
                        })
                    })
                })
                .collect(),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

fn unique_index<'a>(
    ids: impl Iterator<Item = &'a str>,
    what: &str,
) -> Result<HashMap<&'a str, usize>> {
    let mut map = HashMap::new();
    for (i, id) in ids.enumerate() {
        if map.insert(id, i).is_some() {
            return Err(Error::MalformedRecord {
                context: format!("{what}s"),
                reason: format!("duplicate {what} id {id:?}"),
            });
        }
    }
    Ok(map)
}

fn groups_in_order(voters: &[Voter]) -> Vec<String> {
    let mut seen = Vec::new();
    for v in voters {
        if !seen.contains(&v.group) {
            seen.push(v.group.clone());
        }
    }
    seen
}

// ---------------------------------------------------------------------------
// CSV loading

/// Load the three-file CSV schema. Headers are matched by name.
pub fn load_csv(votes_path: &Path, voters_path: &Path, bills_path: &Path) -> Result<VoteDataset> {
    let voters = read_voters_csv(voters_path)?;
    let bills = read_bills_csv(bills_path)?;
    let votes = read_votes_csv(votes_path)?;
    VoteDataset::new(voters, bills, votes)
}

struct HeaderMap {
    positions: Vec<usize>,
}

impl HeaderMap {
    fn new(path: &Path, headers: &csv::StringRecord, wanted: &[&str]) -> Result<HeaderMap> {
        let mut positions = Vec::with_capacity(wanted.len());
        for name in wanted {
            let pos = headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::MalformedRecord {
                    context: display(path),
                    reason: format!("missing column {name:?} in header"),
                })?;
            positions.push(pos);
        }
        Ok(HeaderMap { positions })
    }

    fn get<'r>(&self, record: &'r csv::StringRecord, field: usize, ctx: &str) -> Result<&'r str> {
        record
            .get(self.positions[field])
            .map(str::trim)
            .ok_or_else(|| Error::MalformedRecord {
                context: ctx.to_string(),
                reason: "row has fewer fields than the header".into(),
            })
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(Error::from)
}

fn read_voters_csv(path: &Path) -> Result<Vec<Voter>> {
    let mut rdr = open_reader(path)?;
    let headers = rdr.headers()?.clone();
    let map = HeaderMap::new(path, &headers, &["voter_id", "group"])?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let ctx = format!("{}:{}", display(path), i + 2);
        let id = map.get(&rec, 0, &ctx)?;
        let group = map.get(&rec, 1, &ctx)?;
        if id.is_empty() {
            return Err(Error::MalformedRecord {
                context: ctx,
                reason: "empty voter_id".into(),
            });
        }
        out.push(Voter {
            id: id.to_string(),
            group: group.to_string(),
        });
    }
    if out.is_empty() {
        return Err(Error::MalformedRecord {
            context: display(path),
            reason: "no voter records".into(),
        });
    }
    Ok(out)
}

fn read_bills_csv(path: &Path) -> Result<Vec<Bill>> {
    let mut rdr = open_reader(path)?;
    let headers = rdr.headers()?.clone();
    let map = HeaderMap::new(
        path,
        &headers,
        &["bill_id", "date", "description", "secret"],
    )?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let ctx = format!("{}:{}", display(path), i + 2);
        let id = map.get(&rec, 0, &ctx)?;
        let date_str = map.get(&rec, 1, &ctx)?;
        let description = map.get(&rec, 2, &ctx)?;
        let secret_str = map.get(&rec, 3, &ctx)?;
        if id.is_empty() {
            return Err(Error::MalformedRecord {
                context: ctx,
                reason: "empty bill_id".into(),
            });
        }
        let date =
            NaiveDate::parse_from_str(date_str, DATE_FMT).map_err(|e| Error::MalformedRecord {
                context: ctx.clone(),
                reason: format!("bad date {date_str:?}: {e}"),
            })?;
        let secret_ballot = match secret_str {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::MalformedRecord {
                    context: ctx,
                    reason: format!("secret must be 0 or 1, got {other:?}"),
                })
            }
        };
        out.push(Bill {
            id: id.to_string(),
            date,
            description: description.to_string(),
            secret_ballot,
        });
    }
    if out.is_empty() {
        return Err(Error::MalformedRecord {
            context: display(path),
            reason: "no bill records".into(),
        });
    }
    Ok(out)
}

fn read_votes_csv(path: &Path) -> Result<Vec<(String, String, VoteValue)>> {
    let mut rdr = open_reader(path)?;
    let headers = rdr.headers()?.clone();
    let map = HeaderMap::new(path, &headers, &["voter_id", "bill_id", "vote"])?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let ctx = format!("{}:{}", display(path), i + 2);
        let voter = map.get(&rec, 0, &ctx)?;
        let bill = map.get(&rec, 1, &ctx)?;
        let vote_str = map.get(&rec, 2, &ctx)?;
        let vote = VoteValue::parse(vote_str).ok_or_else(|| Error::UnknownVoteString {
            context: ctx.clone(),
            value: vote_str.to_string(),
        })?;
        out.push((voter.to_string(), bill.to_string(), vote));
    }
    if out.is_empty() {
        return Err(Error::MalformedRecord {
            context: display(path),
            reason: "no vote records".into(),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON loading

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonDataset {
    pub voters: Vec<JsonVoter>,
    pub bills: Vec<JsonBill>,
    pub votes: Vec<JsonVote>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonVoter {
    pub voter_id: String,
    pub group: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonBill {
    pub bill_id: String,
    pub date: String,
    pub description: String,
    pub secret: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonVote {
    pub voter_id: String,
    pub bill_id: String,
    pub vote: String,
}

/// Load the single-document JSON schema.
pub fn load_json(path: &Path) -> Result<VoteDataset> {
    let mut text = String::new();
    std::fs::File::open(path)?.read_to_string(&mut text)?;
    let doc: JsonDataset = serde_json::from_str(&text)?;
    dataset_from_json(doc, &display(path))
}

pub fn dataset_from_json(doc: JsonDataset, ctx: &str) -> Result<VoteDataset> {
    let voters: Vec<Voter> = doc
        .voters
        .into_iter()
        .map(|v| Voter {
            id: v.voter_id,
            group: v.group,
        })
        .collect();
    let bills = doc
        .bills
        .into_iter()
        .enumerate()
        .map(|(i, b)| {
            let date = NaiveDate::parse_from_str(&b.date, DATE_FMT).map_err(|e| {
                Error::MalformedRecord {
                    context: format!("{ctx} bills[{i}]"),
                    reason: format!("bad date {:?}: {e}", b.date),
                }
            })?;
            Ok(Bill {
                id: b.bill_id,
                date,
                description: b.description,
                secret_ballot: b.secret,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let votes = doc
        .votes
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let value = VoteValue::parse(&v.vote).ok_or_else(|| Error::UnknownVoteString {
                context: format!("{ctx} votes[{i}]"),
                value: v.vote.clone(),
            })?;
            Ok((v.voter_id, v.bill_id, value))
        })
        .collect::<Result<Vec<_>>>()?;
    if voters.is_empty() || bills.is_empty() {
        return Err(Error::MalformedRecord {
            context: ctx.to_string(),
            reason: "dataset needs at least one voter and one bill".into(),
        });
    }
    VoteDataset::new(voters, bills, votes)
}

// ---------------------------------------------------------------------------
// Cleaning

/// Apply the removal rules until a fixed point: secret ballots, then voters
/// that never voted, then bills where every retained voter produced the same
/// encoded value. Dropping bills can create all-not-voting voters, hence the
/// iteration.
pub fn clean_dataset(d: &VoteDataset) -> Result<(VoteDataset, CleaningReport)> {
    let m = d.n_voters();
    let n = d.n_bills();
    let mut keep_voter = vec![true; m];
    let mut keep_bill = vec![true; n];
    let mut report = CleaningReport::default();

    // Secret ballots go first and never come back.
    for (bi, b) in d.bills.iter().enumerate() {
        if b.secret_ballot {
            keep_bill[bi] = false;
            report.secret_bills += 1;
        }
    }

    loop {
        report.passes += 1;
        let mut changed = false;

        for (vi, keep) in keep_voter.iter_mut().enumerate() {
            if !*keep {
                continue;
            }
            let active = (0..n).any(|bi| keep_bill[bi] && d.vote(vi, bi) != VoteValue::NotVoting);
            if !active {
                *keep = false;
                report.inactive_voters += 1;
                changed = true;
            }
        }

        for (bi, keep) in keep_bill.iter_mut().enumerate() {
            if !*keep {
                continue;
            }
            let mut values = (0..m).filter(|&vi| keep_voter[vi]).map(|vi| d.vote(vi, bi));
            let constant = match values.next() {
                None => true,
                Some(first) => values.all(|v| v == first),
            };
            if constant {
                *keep = false;
                report.constant_bills += 1;
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }

    let voters: Vec<Voter> = d
        .voters
        .iter()
        .zip(&keep_voter)
        .filter(|(_, k)| **k)
        .map(|(v, _)| v.clone())
        .collect();
    let bills: Vec<Bill> = d
        .bills
        .iter()
        .zip(&keep_bill)
        .filter(|(_, k)| **k)
        .map(|(b, _)| b.clone())
        .collect();
    if voters.is_empty() || bills.is_empty() {
        return Err(Error::EmptyAfterCleaning {
            voters: voters.len(),
            bills: bills.len(),
        });
    }

    let mut grid = Vec::with_capacity(voters.len() * bills.len());
    for (vi, &keep) in keep_voter.iter().enumerate() {
        if !keep {
            continue;
        }
        for (bi, &keep_b) in keep_bill.iter().enumerate() {
            if keep_b {
                grid.push(d.vote(vi, bi));
            }
        }
    }

    let cleaned = VoteDataset::from_dense(voters, bills, grid)?;
    Ok((cleaned, report))
}
