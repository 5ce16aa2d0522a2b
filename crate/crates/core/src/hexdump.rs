//! Annotated hexdump: 16 bytes per row with one annotation lane per
//! relation. Field bytes are marked `##`, span bytes `--`. Output is plain
//! ASCII and byte-stable for a fixed input and relation set.

use crate::relation::{classify_form, RelationField, RelationForm};

fn form_name(form: RelationForm) -> &'static str {
    match form {
        RelationForm::OffsetA => "offset_a",
        RelationForm::SizePostB => "size_post_b",
        RelationForm::SizeInclusiveC => "size_inclusive_c",
        RelationForm::SizeIndirectD => "size_indirect_d",
        RelationForm::SizeTotalE => "size_total_e",
    }
}

pub fn render(bytes: &[u8], relations: &[RelationField]) -> String {
    let mut out = String::new();
    for (i, r) in relations.iter().enumerate() {
        out.push_str(&format!(
            "r{i}: field p={} s={} e={:?}  span a={} b={}  {}\n",
            r.p,
            r.s,
            r.e,
            r.a,
            r.b,
            form_name(classify_form(r, bytes.len()))
        ));
    }
    if !relations.is_empty() {
        out.push('\n');
    }
    let rows = bytes.len().div_ceil(16).max(1);
    for row in 0..rows {
        let lo = row * 16;
        let hi = (lo + 16).min(bytes.len());
        out.push_str(&format!("{lo:08x}  "));
        for k in 0..16 {
            if k == 8 {
                out.push(' ');
            }
            match bytes.get(lo + k) {
                Some(b) => out.push_str(&format!("{b:02x} ")),
                None => out.push_str("   "),
            }
        }
        out.push_str(" |");
        for &b in &bytes[lo..hi] {
            out.push(if (0x20..0x7f).contains(&b) { b as char } else { '.' });
        }
        out.push_str("|\n");
        for (i, r) in relations.iter().enumerate() {
            let field = r.field_range();
            let touches = |pos: usize| field.contains(&pos) || (r.a..r.b).contains(&pos);
            if !(lo..hi).any(touches) {
                continue;
            }
            out.push_str(&format!("{:>8}  ", format!("r{i}")));
            for k in 0..16 {
                if k == 8 {
                    out.push(' ');
                }
                let pos = lo + k;
                let mark = if pos >= bytes.len() {
                    "  "
                } else if field.contains(&pos) {
                    "##"
                } else if (r.a..r.b).contains(&pos) {
                    "--"
                } else {
                    "  "
                };
                out.push_str(mark);
                out.push(' ');
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::Endianness;

    #[test]
    fn render_is_stable() {
        let bytes: Vec<u8> = (0..40).collect();
        let rels = vec![RelationField::new(4, 20, 0, 2, Endianness::Big).unwrap()];
        let a = render(&bytes, &rels);
        let b = render(&bytes, &rels);
        assert_eq!(a, b);
        assert!(a.contains("r0: field p=0 s=2 e=Big  span a=4 b=20  size_indirect_d"));
        assert!(a.contains("##"));
        assert!(a.contains("--"));
    }

    #[test]
    fn empty_input_renders_one_row() {
        let s = render(&[], &[]);
        assert!(s.starts_with("00000000"));
    }
}
