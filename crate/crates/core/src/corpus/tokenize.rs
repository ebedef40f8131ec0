/// Characters that always form a token of their own.
const PUNCTUATION: &[char] = &['.', ',', '!', '?', '"', '\'', ':', ';', ')', '('];

/// Lowercases `text` and splits it on whitespace and on the punctuation set
/// `.,!?"':;)(`. Punctuation characters are kept as standalone tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            flush(&mut current, &mut tokens);
        } else if PUNCTUATION.contains(&ch) {
            flush(&mut current, &mut tokens);
            tokens.push(ch.to_string());
        } else {
            current.extend(ch.to_lowercase());
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}
