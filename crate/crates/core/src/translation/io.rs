//! Model directory layout: a readable phrase table, the LM n-grams and the
//! decoder weights.

use std::fmt::Write as _;
use std::path::Path;

use super::{lm_from_strings, FeatureWeights, PhraseOption, PhraseTable, TranslationModel, Vocab};
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::text::{self, tokenize_pattern};

pub const PHRASE_TABLE_FILE: &str = "phrase-table.tsv";
pub const LM_FILE: &str = "lm.tsv";
pub const MODEL_CONF_FILE: &str = "model.conf";

impl TranslationModel {
    pub fn phrase_table_tsv(&self) -> String {
        let mut out = String::new();
        for (s, t, p_fwd, p_rev) in self.phrase_entries() {
            let _ = writeln!(out, "{}\t{}\t{p_fwd}\t{p_rev}", s.join(" "), t.join(" "));
        }
        out
    }

    pub fn lm_tsv(&self) -> String {
        let mut entries: Vec<(Vec<String>, f64)> = self.lm.entries().map(|(k, v)| (self.vocab.strings(k), v)).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out = format!(
            "# order={}\n# backoff={}\n# unk_logprob={}\n",
            self.lm.order(),
            self.lm.backoff(),
            self.lm.unk_logprob()
        );
        for (k, v) in entries {
            let _ = writeln!(out, "{}\t{v}", k.join(" "));
        }
        out
    }

    pub fn conf(&self) -> String {
        let w = &self.weights;
        format!(
            "max_phrase_len={}\nw_tm_fwd={}\nw_tm_rev={}\nw_lm={}\nw_word_penalty={}\n",
            self.max_phrase_len, w.tm_fwd, w.tm_rev, w.lm, w.word_penalty
        )
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        text::write_string(&dir.join(PHRASE_TABLE_FILE), &self.phrase_table_tsv())?;
        text::write_string(&dir.join(LM_FILE), &self.lm_tsv())?;
        text::write_string(&dir.join(MODEL_CONF_FILE), &self.conf())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let conf = KeyValues::read(&dir.join(MODEL_CONF_FILE))?;
        conf.check_keys(&["max_phrase_len", "w_tm_fwd", "w_tm_rev", "w_lm", "w_word_penalty"])?;
        let d = FeatureWeights::default();
        let weights = FeatureWeights {
            tm_fwd: conf.get_or("w_tm_fwd", d.tm_fwd)?,
            tm_rev: conf.get_or("w_tm_rev", d.tm_rev)?,
            lm: conf.get_or("w_lm", d.lm)?,
            word_penalty: conf.get_or("w_word_penalty", d.word_penalty)?,
        };
        let mut vocab = Vocab::default();
        let mut phrases = PhraseTable::default();
        let pt_path = dir.join(PHRASE_TABLE_FILE);
        let pt_label = text::file_label(&pt_path);
        let mut max_seen = 1;
        for (line, raw) in text::data_lines(&text::read_to_string(&pt_path)?) {
            let f: Vec<&str> = raw.split('\t').collect();
            if f.len() != 4 {
                return Err(Error::parse(
                    &pt_label,
                    line,
                    format!("expected 4 fields, found {}", f.len()),
                ));
            }
            let prob = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|p| *p > 0.0 && *p <= 1.0)
                    .ok_or_else(|| Error::parse(&pt_label, line, format!("probability `{s}` not in (0,1]")))
            };
            let (src, tgt) = (tokenize_pattern(f[0]), tokenize_pattern(f[1]));
            if src.is_empty() || tgt.is_empty() {
                return Err(Error::parse(&pt_label, line, "empty phrase"));
            }
            max_seen = max_seen.max(src.len());
            let option = PhraseOption {
                target: vocab.intern_all(&tgt),
                p_fwd: prob(f[2])?,
                p_rev: prob(f[3])?,
            };
            phrases.insert(vocab.intern_all(&src), option);
        }

        let lm_path = dir.join(LM_FILE);
        let lm_label = text::file_label(&lm_path);
        let lm_text = text::read_to_string(&lm_path)?;
        let mut order = None;
        let mut backoff = super::BACKOFF;
        let mut unk = super::UNK_LOGPROB;
        for (i, l) in lm_text.lines().enumerate() {
            let Some(h) = l.strip_prefix("# ") else { continue };
            let Some((k, v)) = h.split_once('=') else { continue };
            let bad = || Error::parse(&lm_label, i + 1, format!("invalid header value `{v}`"));
            match k {
                "order" => order = Some(v.parse::<usize>().map_err(|_| bad())?),
                "backoff" => backoff = v.parse().map_err(|_| bad())?,
                "unk_logprob" => unk = v.parse().map_err(|_| bad())?,
                _ => {}
            }
        }
        let order = order
            .filter(|o| (1..=super::lm::MAX_ORDER).contains(o))
            .ok_or_else(|| Error::parse(&lm_label, 1, "missing or invalid `# order=` header"))?;
        let mut entries = Vec::new();
        for (line, raw) in text::data_lines(&lm_text) {
            let (k, v) = raw
                .split_once('\t')
                .ok_or_else(|| Error::parse(&lm_label, line, "expected `ngram<TAB>logprob`"))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::parse(&lm_label, line, format!("invalid log-probability `{v}`")))?;
            entries.push((tokenize_pattern(k), v));
        }
        let lm = lm_from_strings(&mut vocab, order, backoff, unk, entries);
        Ok(Self {
            vocab,
            phrases,
            lm,
            weights,
            max_phrase_len: conf.get_or("max_phrase_len", max_seen)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{train_on_sentences, DecodeConfig, TrainConfig};
    use super::*;
    use crate::text::tokenize;

    #[test]
    fn save_load_preserves_decoding() {
        let pairs = vec![
            (tokenize("how much is a"), tokenize("a price")),
            (tokenize("how much is b"), tokenize("b price")),
            (tokenize("cost of a"), tokenize("a price")),
        ];
        let m = train_on_sentences(&pairs, &TrainConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let loaded = TranslationModel::load(dir.path()).unwrap();
        assert_eq!(loaded.phrase_table_tsv(), m.phrase_table_tsv());
        assert_eq!(loaded.lm_tsv(), m.lm_tsv());
        let src = tokenize("how much is a");
        assert_eq!(
            loaded.decode(&src, &DecodeConfig::default()),
            m.decode(&src, &DecodeConfig::default())
        );
    }

    #[test]
    fn bad_probability_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(MODEL_CONF_FILE), "").unwrap();
        std::fs::write(dir.path().join(PHRASE_TABLE_FILE), "a\tb\t1.0\t1.0\na\tc\t2.0\t1.0\n").unwrap();
        std::fs::write(dir.path().join(LM_FILE), "# order=2\n").unwrap();
        let err = TranslationModel::load(dir.path()).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }
}
