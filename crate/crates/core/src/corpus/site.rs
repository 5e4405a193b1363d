use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Built-in member-region list, one name per line.
pub const DEFAULT_MEMBERS: &str = include_str!("../../data/members.txt");

const HEADER: [&str; 5] = ["no", "institution", "tier", "region", "url"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Provinsi,
    KabupatenKota,
    Kecamatan,
    Desa,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Provinsi => "provinsi",
            Tier::KabupatenKota => "kabupaten-kota",
            Tier::Kecamatan => "kecamatan",
            Tier::Desa => "desa",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Tier {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match normalize_region(s).as_str() {
            "provinsi" => Ok(Tier::Provinsi),
            "kabupaten-kota" | "kabupaten/kota" | "kab/kota" => Ok(Tier::KabupatenKota),
            "kecamatan" => Ok(Tier::Kecamatan),
            "desa" => Ok(Tier::Desa),
            other => Err(format!("unknown tier `{other}`")),
        }
    }
}

/// One website in the inventory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteRecord {
    pub no: u32,
    pub institution: String,
    pub tier: Tier,
    pub region: String,
    pub url: String,
    pub smart_city_member: bool,
}

/// Case-folded, whitespace-collapsed form used for region matching.
pub fn normalize_region(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Ordered list of member regions. The order is the reporting order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberRegions {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for MemberRegions {
    fn default() -> Self {
        Self::parse(DEFAULT_MEMBERS).expect("built-in member list is nonempty")
    }
}

impl MemberRegions {
    /// Later duplicates (after normalization) are dropped.
    pub fn new<I, S>(names: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = Self {
            names: Vec::new(),
            index: HashMap::new(),
        };
        for name in names {
            let display = name.as_ref().split_whitespace().collect::<Vec<_>>().join(" ");
            if display.is_empty() {
                continue;
            }
            let key = normalize_region(&display);
            if !out.index.contains_key(&key) {
                out.index.insert(key, out.names.len());
                out.names.push(display);
            }
        }
        if out.names.is_empty() {
            return Err(CorpusError::EmptyMembers);
        }
        Ok(out)
    }

    /// One name per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Position of `region` in the list, if it is a member.
    pub fn position(&self, region: &str) -> Option<usize> {
        self.index.get(&normalize_region(region)).copied()
    }

    pub fn contains(&self, region: &str) -> bool {
        self.position(region).is_some()
    }

    /// The list's spelling of `region`.
    pub fn canonical(&self, region: &str) -> Option<&str> {
        self.position(region).map(|i| self.names[i].as_str())
    }
}

/// Keeps the records whose region is a member, in input order.
pub fn membership_filter(records: &[SiteRecord], members: &MemberRegions) -> Vec<SiteRecord> {
    records
        .iter()
        .filter(|r| members.contains(&r.region))
        .cloned()
        .collect()
}

#[derive(Deserialize)]
struct Row {
    no: u32,
    institution: String,
    tier: String,
    region: String,
    url: String,
}

/// Reads a corpus CSV and marks membership.
pub fn ingest_corpus(path: &Path, members: &MemberRegions) -> Result<Vec<SiteRecord>, CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_corpus(file, members)
}

/// Like [`ingest_corpus`] over any reader. Line numbers count the header as
/// line 1.
pub fn read_corpus<R: Read>(input: R, members: &MemberRegions) -> Result<Vec<SiteRecord>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(|e| csv_error(&e, 1))?.clone();
    let names: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    for (i, want) in HEADER.iter().enumerate() {
        if names.get(i).map(String::as_str) != Some(*want) {
            return Err(CorpusError::Csv {
                line: 1,
                column: (*want).to_string(),
                message: format!("expected header `{}`", HEADER.join(",")),
            });
        }
    }

    let mut out = Vec::new();
    let mut seen_urls: HashSet<String> = HashSet::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| csv_error(&e, 0))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let row: Row = record.deserialize(Some(&header)).map_err(|e| {
            let column = match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err
                    .field()
                    .and_then(|f| HEADER.get(f as usize))
                    .unwrap_or(&"?")
                    .to_string(),
                _ => "?".to_string(),
            };
            CorpusError::Csv {
                line,
                column,
                message: e.to_string(),
            }
        })?;
        let bad = |column: &str, message: String| CorpusError::Csv {
            line,
            column: column.to_string(),
            message,
        };
        let tier: Tier = row.tier.parse().map_err(|m| bad("tier", m))?;
        if row.region.is_empty() {
            return Err(bad("region", "region is empty".into()));
        }
        if row.url.is_empty() {
            return Err(bad("url", "url is empty".into()));
        }
        if !seen_urls.insert(row.url.to_ascii_lowercase()) {
            return Err(CorpusError::DuplicateUrl { line, url: row.url });
        }
        out.push(SiteRecord {
            no: row.no,
            smart_city_member: members.contains(&row.region),
            institution: row.institution,
            tier,
            region: row.region,
            url: row.url,
        });
    }
    Ok(out)
}

fn csv_error(e: &csv::Error, fallback_line: u64) -> CorpusError {
    CorpusError::Csv {
        line: e.position().map_or(fallback_line, |p| p.line()),
        column: "?".into(),
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIVE: &str = "no,institution,tier,region,url
1,Dinas Kominfo,provinsi,Web SKPD Provinsi,https://diskominfo.jabarprov.go.id
2,Pemkot Bandung,kabupaten-kota,Kota Bandung,https://bandung.go.id
3,Pemkab Garut,kabupaten-kota,Kab. Garut,https://garutkab.go.id
4,\"Kecamatan Coblong, Bandung\",kecamatan,  kota   BANDUNG ,https://coblong.bandung.go.id
5,Desa Sukamaju,desa,Kab. Bogor,https://sukamaju.desa.id
";

    #[test]
    fn five_rows() {
        let recs = read_corpus(FIVE.as_bytes(), &MemberRegions::default()).unwrap();
        assert_eq!(recs.len(), 5);
        assert_eq!(recs[3].institution, "Kecamatan Coblong, Bandung");
        assert_eq!(recs[3].tier, Tier::Kecamatan);
        let flags: Vec<_> = recs.iter().map(|r| r.smart_city_member).collect();
        assert_eq!(flags, [true, true, false, true, true]);
    }

    #[test]
    fn duplicate_url_reports_second_line() {
        let mut text = String::from("no,institution,tier,region,url\n");
        for i in 1..=6 {
            let url = if i == 2 || i == 6 {
                "https://dup.go.id".to_string()
            } else {
                format!("https://s{i}.go.id")
            };
            text.push_str(&format!("{i},I{i},desa,Kab. Bogor,{url}\n"));
        }
        match read_corpus(text.as_bytes(), &MemberRegions::default()) {
            Err(CorpusError::DuplicateUrl { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_cell_names_line_and_column() {
        let text = "no,institution,tier,region,url\n1,A,desa,Kab. Bogor,https://a\nx,B,desa,Kab. Bogor,https://b\n";
        match read_corpus(text.as_bytes(), &MemberRegions::default()) {
            Err(CorpusError::Csv { line, column, .. }) => assert_eq!((line, column.as_str()), (3, "no")),
            other => panic!("{other:?}"),
        }
        let text = "no,institution,tier,region,url\n1,A,dusun,Kab. Bogor,https://a\n";
        match read_corpus(text.as_bytes(), &MemberRegions::default()) {
            Err(CorpusError::Csv { line, column, .. }) => assert_eq!((line, column.as_str()), (2, "tier")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_header() {
        let text = "id,institution,tier,region,url\n";
        assert!(matches!(
            read_corpus(text.as_bytes(), &MemberRegions::default()),
            Err(CorpusError::Csv { line: 1, .. })
        ));
    }

    #[test]
    fn filter_examples() {
        let recs = read_corpus(FIVE.as_bytes(), &MemberRegions::default()).unwrap();
        let members = MemberRegions::default();
        let kept = membership_filter(&recs, &members);
        let nos: Vec<_> = kept.iter().map(|r| r.no).collect();
        assert_eq!(nos, [1, 2, 4, 5]);
        assert!(members.contains("Kota Bandung"));
        assert!(!members.contains("Kab. Garut"));
        assert!(membership_filter(&[], &members).is_empty());
    }

    #[test]
    fn default_members() {
        let m = MemberRegions::default();
        assert_eq!(m.len(), 12);
        assert_eq!(m.names()[0], "Web SKPD Provinsi");
        assert_eq!(m.names()[11], "Kab. Cirebon");
        assert_eq!(m.canonical(" kota  bandung"), Some("Kota Bandung"));
        assert!(matches!(
            MemberRegions::parse("# nothing\n\n"),
            Err(CorpusError::EmptyMembers)
        ));
    }
}
