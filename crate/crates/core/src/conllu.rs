//! CoNLL-U ingestion.
//!
//! Ten tab-separated columns per token line, `#` comments, blank lines between sentences.
//! Multiword ranges (`1-2`) and empty nodes (`1.1`) are skipped in favour of the basic tokens.

use crate::error::{ConlluError, StructureError};
use crate::sentence::{Sentence, UDToken};

/// Parses a whole document. Each sentence is validated as a single-rooted acyclic tree.
pub fn parse_conllu(text: &str) -> Result<Vec<Sentence>, ConlluError> {
    let mut out = Vec::new();
    let mut tokens: Vec<UDToken> = Vec::new();
    let mut sent_text: Option<String> = None;

    let mut flush = |tokens: &mut Vec<UDToken>, sent_text: &mut Option<String>, line: usize| {
        if tokens.is_empty() {
            *sent_text = None;
            return Ok(());
        }
        let mut s = Sentence::from_tokens(std::mem::take(tokens));
        if let Some(t) = sent_text.take() {
            s.text = t;
        }
        s.validate().map_err(|source| ConlluError::Structure { line, source })?;
        out.push(s);
        Ok(())
    };

    let mut last = 0;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        last = lineno;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut tokens, &mut sent_text, lineno)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if !tokens.is_empty() {
                return Err(ConlluError::Malformed {
                    line: lineno,
                    msg: "comment inside a sentence block".into(),
                });
            }
            if let Some(t) = comment.trim().strip_prefix("text") {
                if let Some(t) = t.trim_start().strip_prefix('=') {
                    sent_text = Some(t.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::Malformed {
                line: lineno,
                msg: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0].parse().map_err(|_| ConlluError::Malformed {
            line: lineno,
            msg: format!("bad token id `{}`", cols[0]),
        })?;
        let head: usize = cols[6].parse().map_err(|_| ConlluError::Malformed {
            line: lineno,
            msg: format!("bad head `{}`", cols[6]),
        })?;
        if id != tokens.len() + 1 {
            return Err(ConlluError::Malformed {
                line: lineno,
                msg: format!("token id {} out of sequence", id),
            });
        }
        tokens.push(UDToken {
            id,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    flush(&mut tokens, &mut sent_text, last)?;
    Ok(out)
}

/// Parses a document expected to hold exactly one sentence.
pub fn parse_single(text: &str) -> Result<Sentence, ConlluError> {
    let mut v = parse_conllu(text)?;
    match v.len() {
        1 => Ok(v.remove(0)),
        n => Err(ConlluError::Malformed {
            line: 0,
            msg: format!("expected one sentence, found {}", n),
        }),
    }
}

/// Serializes sentences back to CoNLL-U with a `# text` comment per block.
pub fn to_conllu(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str("# text = ");
        out.push_str(&s.text);
        out.push('\n');
        for t in &s.tokens {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_\n",
                t.id, t.form, t.lemma, t.upos, t.head, t.deprel
            ));
        }
        out.push('\n');
    }
    out
}

/// Rejects a block whose structure cannot be binarized.
pub fn check_tree(s: &Sentence) -> Result<(), StructureError> {
    if s.is_empty() {
        return Err(StructureError::Empty);
    }
    s.validate()?;
    if !s.is_projective() {
        return Err(StructureError::NonProjective);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOGS: &str = "# text = Every healthy person plays sports\n\
1\tEvery\tevery\tDET\t_\t_\t3\tdet\t_\t_\n\
2\thealthy\thealthy\tADJ\t_\t_\t3\tamod\t_\t_\n\
3\tperson\tperson\tNOUN\t_\t_\t4\tnsubj\t_\t_\n\
4\tplays\tplay\tVERB\t_\t_\t0\troot\t_\t_\n\
5\tsports\tsport\tNOUN\t_\t_\t4\tobj\t_\t_\n\n";

    #[test]
    fn single_block() {
        let v = parse_conllu(DOGS).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].len(), 5);
        assert_eq!(v[0].text, "Every healthy person plays sports");
        assert_eq!(v[0].tok(4).lemma, "play");
    }

    #[test]
    fn empty_document() {
        assert!(parse_conllu("").unwrap().is_empty());
        assert!(parse_conllu("\n\n").unwrap().is_empty());
    }

    #[test]
    fn multiword_range_skipped() {
        let doc = "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n\
2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n\
3\trun\trun\tVERB\t_\t_\t0\troot\t_\t_\n";
        let v = parse_conllu(doc).unwrap();
        assert_eq!(v[0].len(), 3);
        assert_eq!(v[0].text, "don't run");
    }

    #[test]
    fn two_token_cycle_rejected() {
        let doc = "1\ta\ta\tX\t_\t_\t2\tdep\t_\t_\n2\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n";
        match parse_conllu(doc) {
            Err(ConlluError::Structure { source: StructureError::Cycle(_), .. }) => {}
            other => panic!("expected cycle error, got {:?}", other),
        }
    }

    #[test]
    fn malformed_line_reports_number() {
        let doc = "# c\n1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\n";
        match parse_conllu(doc) {
            Err(ConlluError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn serialization_reparses() {
        let v = parse_conllu(DOGS).unwrap();
        assert_eq!(parse_conllu(&to_conllu(&v)).unwrap(), v);
    }
}
