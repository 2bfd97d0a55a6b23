//! Corpus metrics on a handful of short sentences.

use uag::metrics::{repetition_degen, rouge_l, words, DiversityReport};

fn main() -> uag::Result<()> {
    let texts = [
        "the old man walked to the harbor at dawn",
        "a young girl painted the harbor at dusk",
        "the old man walked to the market at noon",
        "rain fell on the quiet town all night",
    ];
    let corpus: Vec<Vec<&str>> = texts.iter().map(|t| words(t)).collect();
    for (name, value) in DiversityReport::compute(&corpus)?.rows() {
        println!("{name:<20} {value:.4}");
    }
    println!("rouge-L(0, 2)        {:.4}", rouge_l(&corpus[0], &corpus[2])?);

    let looping = words("it was good and it was good and it was good and it was good");
    println!("repetition (loop)    {:.4}", repetition_degen(&looping, 2)?);
    println!("repetition (text 3)  {:.4}", repetition_degen(&corpus[3], 2)?);
    Ok(())
}
