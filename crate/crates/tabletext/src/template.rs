//! Rule-based template baseline: an introductory sentence naming winner and
//! loser by team points, one sentence per player for the six highest
//! scorers, and a concluding sentence restating the score. Every relation it
//! asserts is verbatim from the table.

use crate::corpus::{Record, Side, F_NAME, PTS, S_NAME, T_CITY, T_NAME, T_PTS};
use crate::error::{Error, Result};

struct Team<'a> {
    name: &'a str,
    city: Option<&'a str>,
    pts: i64,
    pts_str: &'a str,
}

struct Player<'a> {
    first: &'a str,
    sur: Option<&'a str>,
    pts: i64,
    pts_str: &'a str,
    reb: Option<&'a str>,
    ast: Option<&'a str>,
    order: usize,
}

fn team_for(records: &[Record], side: Side) -> Result<Team<'_>> {
    let name = records
        .iter()
        .find(|r| r.side == side && r.rtype == T_NAME)
        .map(|r| r.value.as_str())
        .or_else(|| {
            records.iter().find(|r| r.side == side && r.rtype == T_PTS).map(|r| r.entity.as_str())
        })
        .ok_or_else(|| Error::Validation(format!("no team rows for side {side}")))?;
    let pts_rec = records
        .iter()
        .find(|r| r.side == side && r.rtype == T_PTS)
        .ok_or_else(|| Error::Validation(format!("no T-PTS record for side {side}")))?;
    let pts = pts_rec
        .value
        .parse::<i64>()
        .map_err(|_| Error::Validation(format!("T-PTS value {:?} is not numeric", pts_rec.value)))?;
    let city = records
        .iter()
        .find(|r| r.side == side && r.rtype == T_CITY)
        .map(|r| r.value.as_str());
    Ok(Team { name, city, pts, pts_str: &pts_rec.value })
}

fn players(records: &[Record]) -> Vec<Player<'_>> {
    let mut out = Vec::new();
    for (order, r) in records.iter().enumerate() {
        if r.rtype != F_NAME {
            continue;
        }
        let find = |rtype: &str| {
            records
                .iter()
                .find(|x| x.entity == r.entity && x.rtype == rtype)
                .map(|x| x.value.as_str())
        };
        let pts_str = match find(PTS) {
            Some(v) => v,
            None => continue,
        };
        let pts = match pts_str.parse::<i64>() {
            Ok(v) => v,
            Err(_) => continue,
        };
        out.push(Player {
            first: &r.value,
            sur: find(S_NAME),
            pts,
            pts_str,
            reb: find("REB"),
            ast: find("AST"),
            order,
        });
    }
    // Six highest scorers, ties by table order.
    out.sort_by(|a, b| b.pts.cmp(&a.pts).then(a.order.cmp(&b.order)));
    out.truncate(6);
    out
}

fn push_team(tokens: &mut Vec<String>, team: &Team) {
    if let Some(city) = team.city {
        tokens.push(city.to_string());
    }
    tokens.push(team.name.to_string());
}

/// Emits the template summary as a token sequence. Tables with fewer than
/// six scored players yield proportionally fewer player sentences.
pub fn template_generate(records: &[Record]) -> Result<Vec<String>> {
    let h = team_for(records, Side::H)?;
    let v = team_for(records, Side::V)?;
    // Deterministic tie rule: the home side wins equal scores.
    let (winner, loser) = if v.pts > h.pts { (&v, &h) } else { (&h, &v) };

    let mut tokens: Vec<String> = Vec::new();
    tokens.push("The".into());
    push_team(&mut tokens, winner);
    tokens.push("defeated".into());
    tokens.push("the".into());
    push_team(&mut tokens, loser);
    tokens.push(winner.pts_str.into());
    tokens.push("-".into());
    tokens.push(loser.pts_str.into());
    tokens.push(".".into());

    for p in players(records) {
        tokens.push(p.first.to_string());
        if let Some(sur) = p.sur {
            tokens.push(sur.to_string());
        }
        let mut segments: Vec<Vec<String>> =
            vec![vec!["scored".into(), p.pts_str.into(), "points".into()]];
        if let Some(reb) = p.reb {
            segments.push(vec!["grabbed".into(), reb.into(), "rebounds".into()]);
        }
        if let Some(ast) = p.ast {
            segments.push(vec!["dished".into(), ast.into(), "assists".into()]);
        }
        let m = segments.len();
        for (i, seg) in segments.into_iter().enumerate() {
            if m > 1 && i + 1 == m {
                tokens.push("and".into());
            } else if i > 0 {
                tokens.push(",".into());
            }
            tokens.extend(seg);
        }
        tokens.push(".".into());
    }

    tokens.push("Final".into());
    tokens.push("score".into());
    tokens.push(":".into());
    tokens.push(winner.name.to_string());
    tokens.push(winner.pts_str.into());
    tokens.push(",".into());
    tokens.push(loser.name.to_string());
    tokens.push(loser.pts_str.into());
    tokens.push(".".into());
    Ok(tokens)
}
