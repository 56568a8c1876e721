//! Data model and ingestion: records, examples, vocabulary, the canonical
//! line-oriented file format, a ROTOWIRE-style flattener, and a seeded
//! synthetic box-score generator for desk-scale experiments.
//!
//! Canonical format: UTF-8, one JSON object per line with keys `records`
//! (array of `{value, entity, rtype, side}`), `text` (array of tokens) and
//! optional `static_plan` / `dynamic_plan` index arrays.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plans::{DynamicPlan, StaticPlan};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BEGIN: usize = 2;
pub const END: usize = 3;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const BEGIN_TOKEN: &str = "<begin>";
pub const END_TOKEN: &str = "<end>";

pub const F_NAME: &str = "F_NAME";
pub const S_NAME: &str = "S_NAME";
pub const T_CITY: &str = "T-CITY";
pub const T_NAME: &str = "T-NAME";
pub const T_PTS: &str = "T-PTS";
pub const PTS: &str = "PTS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    H,
    V,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::H => write!(f, "H"),
            Side::V => write!(f, "V"),
        }
    }
}

/// One table entry; the atom of all planning.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Record {
    pub value: String,
    pub entity: String,
    pub rtype: String,
    pub side: Side,
}

impl Record {
    pub fn new(value: &str, entity: &str, rtype: &str, side: Side) -> Self {
        Record {
            value: value.to_string(),
            entity: entity.to_string(),
            rtype: rtype.to_string(),
            side,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.value.is_empty() || self.entity.is_empty() || self.rtype.is_empty() {
            return Err(Error::Validation(format!(
                "record has an empty field: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn is_name(&self) -> bool {
        self.rtype == F_NAME || self.rtype == S_NAME
    }

    /// Tokens that count as a mention of this record's entity.
    pub fn entity_tokens(&self) -> impl Iterator<Item = &str> {
        self.entity.split('_').chain(std::iter::once(self.entity.as_str()))
    }
}

/// A record table paired with a tokenized reference text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameExample {
    pub records: Vec<Record>,
    pub text: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub static_plan: Option<StaticPlan>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dynamic_plan: Option<DynamicPlan>,
}

impl GameExample {
    pub fn new(records: Vec<Record>, text: Vec<String>) -> Self {
        GameExample { records, text, static_plan: None, dynamic_plan: None }
    }

    pub fn validate(&self) -> Result<()> {
        for r in &self.records {
            r.validate()?;
        }
        if let Some(sp) = &self.static_plan {
            for &i in &sp.indices {
                if i >= self.records.len() {
                    return Err(Error::Validation(format!(
                        "static plan index {i} out of range for {} records",
                        self.records.len()
                    )));
                }
            }
            if let Some(dp) = &self.dynamic_plan {
                if dp.pointers.len() != self.text.len() {
                    return Err(Error::Validation(format!(
                        "dynamic plan length {} != text length {}",
                        dp.pointers.len(),
                        self.text.len()
                    )));
                }
                for &p in &dp.pointers {
                    if p >= sp.indices.len().max(1) {
                        return Err(Error::Validation(format!(
                            "dynamic pointer {p} out of range for plan of {}",
                            sp.indices.len()
                        )));
                    }
                }
            }
        } else if self.dynamic_plan.is_some() {
            return Err(Error::Validation(
                "dynamic plan present without a static plan".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Valid,
    Test,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub examples: Vec<GameExample>,
    pub split: Split,
}

impl Corpus {
    pub fn new(examples: Vec<GameExample>) -> Self {
        Corpus { examples, split: Split::Train }
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    Canonical,
    Rotowire,
}

pub fn load_corpus<P: AsRef<Path>>(path: P, format: CorpusFormat) -> Result<Corpus> {
    let content = fs::read_to_string(path.as_ref())?;
    match format {
        CorpusFormat::Canonical => parse_canonical(&content),
        CorpusFormat::Rotowire => parse_rotowire(&content),
    }
}

pub fn parse_canonical(content: &str) -> Result<Corpus> {
    let mut examples = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ex: GameExample = serde_json::from_str(line)
            .map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        ex.validate().map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        examples.push(ex);
    }
    Ok(Corpus::new(examples))
}

pub fn corpus_to_string(corpus: &Corpus) -> String {
    let mut out = String::new();
    for ex in &corpus.examples {
        out.push_str(&serde_json::to_string(ex).expect("serialize example"));
        out.push('\n');
    }
    out
}

pub fn save_corpus<P: AsRef<Path>>(corpus: &Corpus, path: P) -> Result<()> {
    fs::write(path.as_ref(), corpus_to_string(corpus))?;
    Ok(())
}

fn underscore(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join("_")
}

/// Flattens ROTOWIRE-style games (JSON array) into per-record rows: player
/// names become F_NAME/S_NAME rows, team lines become T-* rows keyed by the
/// team name. Rows with value "N/A" are dropped.
fn parse_rotowire(content: &str) -> Result<Corpus> {
    use serde_json::Value;
    let games: Vec<Value> =
        serde_json::from_str(content).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
    let mut examples = Vec::new();
    for (gi, game) in games.iter().enumerate() {
        let get_str = |key: &str| -> Result<String> {
            game.get(key)
                .and_then(|v| v.as_str())
                .map(|s| s.to_string())
                .ok_or_else(|| Error::Parse {
                    line: gi + 1,
                    msg: format!("game missing string field {key:?}"),
                })
        };
        let home_name = underscore(&get_str("home_name")?);
        let vis_name = underscore(&get_str("vis_name")?);
        let home_city = get_str("home_city")?;

        let mut records = Vec::new();
        for (line_key, name, side) in
            [("vis_line", &vis_name, Side::V), ("home_line", &home_name, Side::H)]
        {
            let line = game.get(line_key).and_then(|v| v.as_object()).ok_or_else(|| {
                Error::Parse { line: gi + 1, msg: format!("game missing {line_key}") }
            })?;
            let mut keys: Vec<&String> = line.keys().collect();
            keys.sort_by_key(|k| {
                let head = ["TEAM-CITY", "TEAM-NAME", "TEAM-WINS", "TEAM-LOSSES", "TEAM-PTS"]
                    .iter()
                    .position(|p| p == k);
                (head.unwrap_or(usize::MAX), k.to_string())
            });
            for key in keys {
                let val = line[key].as_str().unwrap_or_default();
                if val.is_empty() || val == "N/A" {
                    continue;
                }
                let rtype = match key.as_str() {
                    "TEAM-CITY" => T_CITY.to_string(),
                    "TEAM-NAME" => T_NAME.to_string(),
                    other => other.replacen("TEAM-", "T-", 1),
                };
                records.push(Record::new(&underscore(val), name, &rtype, side));
            }
        }

        let boxs = game.get("box_score").and_then(|v| v.as_object()).ok_or_else(|| {
            Error::Parse { line: gi + 1, msg: "game missing box_score".into() }
        })?;
        let field = |name: &str, idx: &str| -> Option<String> {
            boxs.get(name)
                .and_then(|m| m.get(idx))
                .and_then(|v| v.as_str())
                .filter(|s| !s.is_empty() && *s != "N/A")
                .map(|s| s.to_string())
        };
        let mut player_ids: Vec<usize> = boxs
            .get("PLAYER_NAME")
            .and_then(|m| m.as_object())
            .map(|m| m.keys().filter_map(|k| k.parse().ok()).collect())
            .unwrap_or_default();
        player_ids.sort_unstable();
        let mut stat_keys: Vec<String> = boxs
            .keys()
            .filter(|k| {
                !matches!(k.as_str(), "PLAYER_NAME" | "FIRST_NAME" | "SECOND_NAME" | "TEAM_CITY")
            })
            .cloned()
            .collect();
        stat_keys.sort_unstable();
        for pid in player_ids {
            let idx = pid.to_string();
            let name = match field("PLAYER_NAME", &idx) {
                Some(n) => underscore(&n),
                None => continue,
            };
            let side = match field("TEAM_CITY", &idx) {
                Some(c) if c == home_city => Side::H,
                Some(_) => Side::V,
                None => Side::V,
            };
            if let Some(first) = field("FIRST_NAME", &idx) {
                records.push(Record::new(&underscore(&first), &name, F_NAME, side));
            }
            if let Some(second) = field("SECOND_NAME", &idx) {
                records.push(Record::new(&underscore(&second), &name, S_NAME, side));
            }
            for key in &stat_keys {
                if let Some(val) = field(key, &idx) {
                    records.push(Record::new(&underscore(&val), &name, key, side));
                }
            }
        }

        let text: Vec<String> = game
            .get("summary")
            .and_then(|v| v.as_array())
            .map(|a| a.iter().filter_map(|t| t.as_str().map(|s| s.to_string())).collect())
            .unwrap_or_default();

        let ex = GameExample::new(records, text);
        ex.validate().map_err(|e| Error::Parse { line: gi + 1, msg: e.to_string() })?;
        examples.push(ex);
    }
    Ok(Corpus::new(examples))
}

/// Append-only string-to-id map.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StrIndex {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl StrIndex {
    pub fn add(&mut self, s: &str) -> usize {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.items.len();
        self.items.push(s.to_string());
        self.index.insert(s.to_string(), i);
        i
    }

    pub fn get(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn strict(&self, s: &str) -> Result<usize> {
        self.get(s).ok_or_else(|| Error::Lookup(s.to_string()))
    }

    pub fn item(&self, i: usize) -> &str {
        &self.items[i]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn from_items(items: Vec<String>) -> Self {
        let index = items.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        StrIndex { items, index }
    }
}

impl Serialize for StrIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.items.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StrIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(StrIndex::from_items(Vec::<String>::deserialize(d)?))
    }
}

/// Token table shared by the text side and the record features, plus the four
/// per-field feature vocabularies used by the reconstruction heads. Ids 0..3
/// are reserved and fixed across save/load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: StrIndex,
    pub values: StrIndex,
    pub entities: StrIndex,
    pub rtypes: StrIndex,
    pub sides: StrIndex,
}

impl Vocabulary {
    fn with_reserved() -> Self {
        let mut tokens = StrIndex::default();
        tokens.add(PAD_TOKEN);
        tokens.add(UNK_TOKEN);
        tokens.add(BEGIN_TOKEN);
        tokens.add(END_TOKEN);
        Vocabulary {
            tokens,
            values: StrIndex::default(),
            entities: StrIndex::default(),
            rtypes: StrIndex::default(),
            sides: StrIndex::default(),
        }
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn token_id(&self, token: &str) -> Option<usize> {
        self.tokens.get(token)
    }

    pub fn id_or_unk(&self, token: &str) -> usize {
        self.tokens.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.item(id)
    }

    /// Record feature lookup; absence is an error, never unknown.
    pub fn feature_id(&self, token: &str) -> Result<usize> {
        self.tokens.strict(token)
    }

    pub fn encode_text(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id_or_unk(t)).collect()
    }
}

/// Builds the vocabulary: text tokens with frequency >= `min_count` in order
/// of first appearance, all record field strings unconditionally, reserved
/// symbols always present.
pub fn build_vocab(corpus: &Corpus, min_count: usize) -> Vocabulary {
    assert!(min_count >= 1, "min_count must be >= 1");
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for ex in &corpus.examples {
        for tok in &ex.text {
            *freq.entry(tok.as_str()).or_insert(0) += 1;
        }
    }
    let mut vocab = Vocabulary::with_reserved();
    for ex in &corpus.examples {
        for tok in &ex.text {
            if freq[tok.as_str()] >= min_count {
                vocab.tokens.add(tok);
            }
        }
    }
    for ex in &corpus.examples {
        for r in &ex.records {
            let side = r.side.to_string();
            vocab.tokens.add(&r.value);
            vocab.tokens.add(&r.entity);
            vocab.tokens.add(&r.rtype);
            vocab.tokens.add(&side);
            vocab.values.add(&r.value);
            vocab.entities.add(&r.entity);
            vocab.rtypes.add(&r.rtype);
            vocab.sides.add(&side);
        }
    }
    vocab
}

const FIRST_NAMES: [&str; 16] = [
    "Alan", "Bria", "Carl", "Dana", "Evan", "Fern", "Gage", "Hana", "Ivan", "Jade", "Kyle",
    "Lena", "Milo", "Nora", "Omar", "Pria",
];
const SURNAMES: [&str; 16] = [
    "Stone", "Reyes", "Banks", "Cole", "Drake", "Ellis", "Frost", "Grant", "Hayes", "Irwin",
    "Jones", "Knox", "Lane", "Moss", "Nash", "Oaks",
];
const TEAMS: [(&str, &str); 8] = [
    ("Riverton", "Falcons"),
    ("Lakeside", "Comets"),
    ("Hillcrest", "Wolves"),
    ("Baytown", "Sharks"),
    ("Mesa", "Hawks"),
    ("Portvale", "Titans"),
    ("Kingsford", "Bears"),
    ("Stonegate", "Rams"),
];
const STATS: [(&str, &str, &str); 5] = [
    ("PTS", "scored", "points"),
    ("REB", "grabbed", "rebounds"),
    ("AST", "dished", "assists"),
    ("STL", "notched", "steals"),
    ("BLK", "swatted", "blocks"),
];

fn stat_spec(t: usize) -> (String, String, String) {
    if t < STATS.len() {
        let (k, v, n) = STATS[t];
        (k.to_string(), v.to_string(), n.to_string())
    } else {
        (format!("X{t}"), "added".to_string(), format!("x{t}s"))
    }
}

pub(crate) fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct PlanBuilder {
    tokens: Vec<String>,
    static_plan: Vec<usize>,
    labels: Vec<Option<usize>>,
}

impl PlanBuilder {
    fn new() -> Self {
        PlanBuilder { tokens: Vec::new(), static_plan: Vec::new(), labels: Vec::new() }
    }

    fn word(&mut self, tok: &str) {
        self.tokens.push(tok.to_string());
        self.labels.push(None);
    }

    /// Token whose value matches a table record.
    fn matched(&mut self, tok: &str, record: usize) {
        self.static_plan.push(record);
        self.tokens.push(tok.to_string());
        self.labels.push(Some(self.static_plan.len() - 1));
    }

    /// First-name token: emits the name pair (F_NAME then S_NAME) into the
    /// static plan; the surname token is matched to the S_NAME entry.
    fn name_pair(&mut self, first: &str, sur: &str, f_rec: usize, s_rec: usize) {
        self.static_plan.push(f_rec);
        let f_pos = self.static_plan.len() - 1;
        self.static_plan.push(s_rec);
        let s_pos = self.static_plan.len() - 1;
        self.tokens.push(first.to_string());
        self.labels.push(Some(f_pos));
        self.tokens.push(sur.to_string());
        self.labels.push(Some(s_pos));
    }

    fn finish(self) -> (Vec<String>, StaticPlan, DynamicPlan) {
        let n = self.labels.len();
        let last = self.labels.iter().rev().find_map(|l| *l).unwrap_or(0);
        let mut pointers = vec![last; n];
        // Non-matching tokens take the next match's position; tokens after
        // the last match keep the last position.
        let mut next = None;
        for i in (0..n).rev() {
            if self.labels[i].is_some() {
                next = self.labels[i];
            }
            if let Some(nx) = next {
                pointers[i] = nx;
            }
        }
        (self.tokens, StaticPlan::new(self.static_plan), DynamicPlan::new(pointers))
    }
}

struct PlayerRows {
    first: String,
    sur: String,
    f_rec: usize,
    s_rec: usize,
    stat_recs: Vec<usize>,
    pts: u32,
}

/// Deterministic synthetic corpus: each example carries a record table (team
/// rows plus name/stat rows per player on both sides), a templated text that
/// mentions a known subset of records in a known order, and the ground-truth
/// static and dynamic plans implied by that template.
pub fn generate_synthetic(
    seed: u64,
    n_examples: usize,
    n_players: usize,
    n_stats: usize,
) -> Corpus {
    assert!(n_examples >= 1 && n_players >= 1 && n_stats >= 1);
    let mut examples = Vec::with_capacity(n_examples);
    for i in 0..n_examples {
        examples.push(synthesize_example(mix_seed(seed, i as u64), n_players, n_stats));
    }
    Corpus::new(examples)
}

fn synthesize_example(seed: u64, n_players: usize, n_stats: usize) -> GameExample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut team_idx: Vec<usize> = (0..TEAMS.len()).collect();
    team_idx.shuffle(&mut rng);
    let (city_v, name_v) = TEAMS[team_idx[0]];
    let (city_h, name_h) = TEAMS[team_idx[1]];

    let total_players = 2 * n_players;
    let mut firsts: Vec<String> = FIRST_NAMES.iter().map(|s| s.to_string()).collect();
    let mut surs: Vec<String> = SURNAMES.iter().map(|s| s.to_string()).collect();
    for k in FIRST_NAMES.len()..total_players {
        firsts.push(format!("Pf{k}"));
        surs.push(format!("Ps{k}"));
    }
    firsts.shuffle(&mut rng);
    surs.shuffle(&mut rng);

    let n_values = 2 + total_players * n_stats;
    let mut pool: Vec<u32> = (1..=(n_values as u32 * 3 + 40)).collect();
    pool.shuffle(&mut rng);
    let mut values = pool.into_iter();
    let pts_v = values.next().unwrap();
    let pts_h = values.next().unwrap();

    let mut records = Vec::new();
    records.push(Record::new(city_v, name_v, T_CITY, Side::V));
    records.push(Record::new(name_v, name_v, T_NAME, Side::V));
    records.push(Record::new(&pts_v.to_string(), name_v, T_PTS, Side::V));
    records.push(Record::new(city_h, name_h, T_CITY, Side::H));
    records.push(Record::new(name_h, name_h, T_NAME, Side::H));
    records.push(Record::new(&pts_h.to_string(), name_h, T_PTS, Side::H));

    let mut players = Vec::with_capacity(total_players);
    for (p, side) in (0..total_players).map(|p| (p, if p < n_players { Side::V } else { Side::H }))
    {
        let first = firsts[p].clone();
        let sur = surs[p].clone();
        let entity = format!("{first}_{sur}");
        let f_rec = records.len();
        records.push(Record::new(&first, &entity, F_NAME, side));
        let s_rec = records.len();
        records.push(Record::new(&sur, &entity, S_NAME, side));
        let mut stat_recs = Vec::with_capacity(n_stats);
        let mut pts = 0;
        for t in 0..n_stats {
            let (rtype, _, _) = stat_spec(t);
            let v = values.next().unwrap();
            if t == 0 {
                pts = v;
            }
            stat_recs.push(records.len());
            records.push(Record::new(&v.to_string(), &entity, &rtype, side));
        }
        players.push(PlayerRows { first, sur, f_rec, s_rec, stat_recs, pts });
    }

    // Mention roll per player in table order, then order sentences by points.
    let mentioned_mask: Vec<bool> = (0..total_players).map(|_| rng.gen_bool(0.75)).collect();
    let mut mentioned: Vec<&PlayerRows> = players
        .iter()
        .zip(&mentioned_mask)
        .filter(|(_, m)| **m)
        .map(|(p, _)| p)
        .collect();
    if mentioned.is_empty() {
        mentioned.push(players.iter().max_by_key(|p| p.pts).unwrap());
    }
    mentioned.sort_by(|a, b| b.pts.cmp(&a.pts));

    let mut b = PlanBuilder::new();
    let v_wins = pts_v > pts_h;
    let (cw, nw, pw, wrec) =
        if v_wins { (city_v, name_v, pts_v, 2) } else { (city_h, name_h, pts_h, 5) };
    let (cl, nl, pl, lrec) =
        if v_wins { (city_h, name_h, pts_h, 5) } else { (city_v, name_v, pts_v, 2) };
    let (wcity_rec, wname_rec) = if v_wins { (0, 1) } else { (3, 4) };
    let (lcity_rec, lname_rec) = if v_wins { (3, 4) } else { (0, 1) };

    b.word("The");
    b.matched(cw, wcity_rec);
    b.matched(nw, wname_rec);
    b.word("defeated");
    b.word("the");
    b.matched(cl, lcity_rec);
    b.matched(nl, lname_rec);
    b.matched(&pw.to_string(), wrec);
    b.word("-");
    b.matched(&pl.to_string(), lrec);
    b.word(".");

    for p in mentioned {
        b.name_pair(&p.first, &p.sur, p.f_rec, p.s_rec);
        let n_mention = n_stats.min(3);
        for t in 0..n_mention {
            if n_mention > 1 {
                if t + 1 == n_mention {
                    b.word("and");
                } else if t > 0 {
                    b.word(",");
                }
            }
            let (_, verb, noun) = stat_spec(t);
            b.word(&verb);
            b.matched(&records[p.stat_recs[t]].value.clone(), p.stat_recs[t]);
            b.word(&noun);
        }
        b.word(".");
    }

    let (text, static_plan, dynamic_plan) = b.finish();
    GameExample {
        records,
        text,
        static_plan: Some(static_plan),
        dynamic_plan: Some(dynamic_plan),
    }
}
