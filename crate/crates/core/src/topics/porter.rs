//! Porter suffix-stripping stemmer (1980 algorithm) with the widely
//! adopted `logi -> log` addition to step 2, so "ontologies" stems to
//! "ontolog" rather than "ontologi".
//!
//! Within each step only the longest matching suffix is attempted; when
//! its condition fails no other rule of that step applies.

/// True when `word[i]` acts as a consonant: not a/e/i/o/u, and `y` only
/// when not preceded by a consonant.
fn is_consonant(word: &[char], i: usize) -> bool {
    match word[i] {
        'a' | 'e' | 'i' | 'o' | 'u' => false,
        'y' => i == 0 || !is_consonant(word, i - 1),
        _ => true,
    }
}

/// The measure m of a stem: the VC repetition count in `[C](VC)^m[V]`.
fn measure(stem: &[char]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..stem.len() {
        let vowel = !is_consonant(stem, i);
        if prev_vowel && !vowel {
            m += 1;
        }
        prev_vowel = vowel;
    }
    m
}

fn has_vowel(stem: &[char]) -> bool {
    (0..stem.len()).any(|i| !is_consonant(stem, i))
}

fn ends_double_consonant(word: &[char]) -> bool {
    let n = word.len();
    n >= 2 && word[n - 1] == word[n - 2] && is_consonant(word, n - 1)
}

/// cvc at the end, where the final consonant is not w, x or y.
fn ends_cvc(word: &[char]) -> bool {
    let n = word.len();
    n >= 3
        && is_consonant(word, n - 3)
        && !is_consonant(word, n - 2)
        && is_consonant(word, n - 1)
        && !matches!(word[n - 1], 'w' | 'x' | 'y')
}

fn ends_with(word: &[char], suffix: &str) -> bool {
    let s: Vec<char> = suffix.chars().collect();
    word.len() >= s.len() && word[word.len() - s.len()..] == s[..]
}

fn set_suffix(word: &mut Vec<char>, suffix_len: usize, replacement: &str) {
    word.truncate(word.len() - suffix_len);
    word.extend(replacement.chars());
}

/// Applies the longest matching rule of a (suffix, replacement) table
/// whose stem condition holds. Rules must be ordered longest-first.
fn apply_table(word: &mut Vec<char>, rules: &[(&str, &str)], cond: impl Fn(&[char]) -> bool) {
    for &(suffix, replacement) in rules {
        if ends_with(word, suffix) {
            let stem_len = word.len() - suffix.chars().count();
            if cond(&word[..stem_len]) {
                set_suffix(word, suffix.chars().count(), replacement);
            }
            return;
        }
    }
}

fn step_1a(word: &mut Vec<char>) {
    if ends_with(word, "sses") {
        set_suffix(word, 4, "ss");
    } else if ends_with(word, "ies") {
        set_suffix(word, 3, "i");
    } else if ends_with(word, "ss") {
        // kept as-is
    } else if ends_with(word, "s") {
        set_suffix(word, 1, "");
    }
}

fn step_1b(word: &mut Vec<char>) {
    if ends_with(word, "eed") {
        if measure(&word[..word.len() - 3]) > 0 {
            set_suffix(word, 3, "ee");
        }
        return;
    }
    let removed = if ends_with(word, "ed") && has_vowel(&word[..word.len() - 2]) {
        set_suffix(word, 2, "");
        true
    } else if ends_with(word, "ing") && has_vowel(&word[..word.len() - 3]) {
        set_suffix(word, 3, "");
        true
    } else {
        false
    };
    if removed {
        if ends_with(word, "at") {
            set_suffix(word, 2, "ate");
        } else if ends_with(word, "bl") {
            set_suffix(word, 2, "ble");
        } else if ends_with(word, "iz") {
            set_suffix(word, 2, "ize");
        } else if ends_double_consonant(word) && !matches!(word[word.len() - 1], 'l' | 's' | 'z') {
            word.pop();
        } else if measure(word) == 1 && ends_cvc(word) {
            word.push('e');
        }
    }
}

fn step_1c(word: &mut [char]) {
    if ends_with(word, "y") && has_vowel(&word[..word.len() - 1]) {
        let n = word.len();
        word[n - 1] = 'i';
    }
}

fn step_2(word: &mut Vec<char>) {
    const RULES: &[(&str, &str)] = &[
        ("ational", "ate"),
        ("ization", "ize"),
        ("iveness", "ive"),
        ("fulness", "ful"),
        ("ousness", "ous"),
        ("tional", "tion"),
        ("biliti", "ble"),
        ("entli", "ent"),
        ("ousli", "ous"),
        ("ation", "ate"),
        ("alism", "al"),
        ("aliti", "al"),
        ("iviti", "ive"),
        ("enci", "ence"),
        ("anci", "ance"),
        ("izer", "ize"),
        ("abli", "able"),
        ("alli", "al"),
        ("ator", "ate"),
        ("logi", "log"),
        ("eli", "e"),
    ];
    apply_table(word, RULES, |stem| measure(stem) > 0);
}

fn step_3(word: &mut Vec<char>) {
    const RULES: &[(&str, &str)] = &[
        ("icate", "ic"),
        ("ative", ""),
        ("alize", "al"),
        ("iciti", "ic"),
        ("ical", "ic"),
        ("ness", ""),
        ("ful", ""),
    ];
    apply_table(word, RULES, |stem| measure(stem) > 0);
}

fn step_4(word: &mut Vec<char>) {
    const RULES: &[(&str, &str)] = &[
        ("ement", ""),
        ("ance", ""),
        ("ence", ""),
        ("able", ""),
        ("ible", ""),
        ("ment", ""),
        ("ant", ""),
        ("ent", ""),
        ("ion", ""),
        ("ism", ""),
        ("ate", ""),
        ("iti", ""),
        ("ous", ""),
        ("ive", ""),
        ("ize", ""),
        ("al", ""),
        ("er", ""),
        ("ic", ""),
        ("ou", ""),
    ];
    for &(suffix, replacement) in RULES {
        if ends_with(word, suffix) {
            let stem = &word[..word.len() - suffix.len()];
            let ok = measure(stem) > 1
                && (suffix != "ion" || stem.ends_with(&['s']) || stem.ends_with(&['t']));
            if ok {
                set_suffix(word, suffix.len(), replacement);
            }
            return;
        }
    }
}

fn step_5a(word: &mut Vec<char>) {
    if ends_with(word, "e") {
        let stem = &word[..word.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            word.pop();
        }
    }
}

fn step_5b(word: &mut Vec<char>) {
    if measure(word) > 1 && ends_double_consonant(word) && word[word.len() - 1] == 'l' {
        word.pop();
    }
}

/// Stems one lowercase token. Tokens of length <= 2 (including the empty
/// string) are returned unchanged.
pub fn stem_token(token: &str) -> String {
    let mut word: Vec<char> = token.chars().collect();
    if word.len() <= 2 {
        return token.to_string();
    }
    step_1a(&mut word);
    step_1b(&mut word);
    step_1c(&mut word);
    step_2(&mut word);
    step_3(&mut word);
    step_4(&mut word);
    step_5a(&mut word);
    step_5b(&mut word);
    word.into_iter().collect()
}
