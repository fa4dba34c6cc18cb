//! Blinded human-evaluation packets and their tally.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemOutput {
    pub system: String,
    pub video_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketOption {
    pub letter: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketItem {
    pub item_id: String,
    pub video_id: String,
    pub options: Vec<PacketOption>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnairePacket {
    pub instructions: String,
    pub items: Vec<PacketItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerKey {
    pub seed: u64,
    /// item id → letter → system.
    pub items: BTreeMap<String, BTreeMap<String, String>>,
}

const INSTRUCTIONS: &str =
    "Watch each video, then pick the one comment you find funniest and most fitting. Options are in random order.";

fn letter(i: usize) -> String {
    char::from(b'A' + i as u8).to_string()
}

/// One item per video with every system's comment behind a shuffled letter.
/// Each system must have exactly one output per video.
pub fn export_questionnaire(
    video_ids: &[String],
    systems: &[String],
    outputs: &[SystemOutput],
    seed: u64,
) -> Result<(QuestionnairePacket, AnswerKey)> {
    if systems.is_empty() || systems.len() > 26 {
        return Err(Error::InvalidParams("a questionnaire needs between 1 and 26 systems".into()));
    }
    let mut by_key: HashMap<(&str, &str), Vec<&SystemOutput>> = HashMap::new();
    for o in outputs {
        by_key.entry((o.video_id.as_str(), o.system.as_str())).or_default().push(o);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut packet = QuestionnairePacket {
        instructions: INSTRUCTIONS.to_string(),
        items: Vec::new(),
    };
    let mut key = AnswerKey {
        seed,
        items: BTreeMap::new(),
    };
    for (n, video_id) in video_ids.iter().enumerate() {
        let mut entries = Vec::with_capacity(systems.len());
        for system in systems {
            match by_key.get(&(video_id.as_str(), system.as_str())).map(Vec::as_slice) {
                Some([one]) => entries.push(*one),
                Some(_) => {
                    return Err(Error::InvalidDataset(format!(
                        "system {system} has more than one comment for video {video_id}"
                    )))
                }
                None => {
                    return Err(Error::MissingSystemOutput {
                        system: system.clone(),
                        video_id: video_id.clone(),
                    })
                }
            }
        }
        entries.shuffle(&mut rng);
        let item_id = format!("q{:03}", n + 1);
        let options = entries
            .iter()
            .enumerate()
            .map(|(i, o)| PacketOption {
                letter: letter(i),
                text: o.text.clone(),
            })
            .collect();
        key.items.insert(
            item_id.clone(),
            entries.iter().enumerate().map(|(i, o)| (letter(i), o.system.clone())).collect(),
        );
        packet.items.push(PacketItem {
            item_id,
            video_id: video_id.clone(),
            options,
        });
    }
    Ok((packet, key))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub responses: usize,
    pub votes: BTreeMap<String, usize>,
    /// Share of responses per system, in percent.
    pub preference_pct: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct Response {
    item_id: String,
    choice: String,
}

/// Tally a CSV with header `item_id,choice`. Every system in the key is
/// reported, including those with no votes.
pub fn tally(key: &AnswerKey, csv_input: impl Read) -> Result<Tally> {
    let mut votes: BTreeMap<String, usize> = key.items.values().flat_map(|m| m.values().cloned()).map(|s| (s, 0)).collect();
    let mut responses = 0;
    for (row, record) in csv::Reader::from_reader(csv_input).deserialize::<Response>().enumerate() {
        let r = record.map_err(|e| Error::InvalidDataset(format!("response row {}: {e}", row + 1)))?;
        let system = key
            .items
            .get(r.item_id.trim())
            .and_then(|m| m.get(&r.choice.trim().to_ascii_uppercase()))
            .ok_or_else(|| Error::InvalidDataset(format!("response row {}: unknown item or choice {}/{}", row + 1, r.item_id, r.choice)))?;
        *votes.get_mut(system).expect("every keyed system is counted") += 1;
        responses += 1;
    }
    let preference_pct = votes
        .iter()
        .map(|(s, v)| {
            let pct = if responses == 0 {
                0.0
            } else {
                100.0 * *v as f64 / responses as f64
            };
            (s.clone(), pct)
        })
        .collect();
    Ok(Tally {
        responses,
        votes,
        preference_pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn systems() -> Vec<String> {
        ["ours", "gpt", "human", "baseline"].map(String::from).to_vec()
    }

    fn outputs(videos: &[&str]) -> Vec<SystemOutput> {
        videos
            .iter()
            .flat_map(|v| {
                systems().into_iter().map(move |s| SystemOutput {
                    text: format!("{s} on {v}"),
                    system: s,
                    video_id: v.to_string(),
                })
            })
            .collect()
    }

    #[test]
    fn two_videos_four_systems() {
        let vids = vec!["v1".to_string(), "v2".to_string()];
        let (packet, key) = export_questionnaire(&vids, &systems(), &outputs(&["v1", "v2"]), 3).unwrap();
        assert_eq!(packet.items.len(), 2);
        assert!(packet.items.iter().all(|i| i.options.len() == 4));
        for item in &packet.items {
            for o in &item.options {
                let system = &key.items[&item.item_id][&o.letter];
                assert_eq!(o.text, format!("{system} on {}", item.video_id));
            }
        }
        let again = export_questionnaire(&vids, &systems(), &outputs(&["v1", "v2"]), 3).unwrap();
        assert_eq!(again.0, packet);
    }

    #[test]
    fn missing_output_is_named() {
        let mut out = outputs(&["v1"]);
        out.retain(|o| o.system != "gpt");
        let err = export_questionnaire(&["v1".to_string()], &systems(), &out, 0).unwrap_err();
        assert!(matches!(err, Error::MissingSystemOutput { ref system, ref video_id } if system == "gpt" && video_id == "v1"));
    }

    #[test]
    fn tally_matches_hand_count() {
        let mut key = AnswerKey {
            seed: 0,
            items: BTreeMap::new(),
        };
        key.items.insert("q001".into(), [("A", "gpt"), ("B", "ours")].map(|(a, b)| (a.into(), b.into())).into());
        key.items.insert("q002".into(), [("A", "ours"), ("B", "gpt")].map(|(a, b)| (a.into(), b.into())).into());
        // Hand count: ours gets q001/B, q002/A, q002/a; gpt gets q001/A. 3 of 4.
        let csv = "item_id,choice\nq001,B\nq002,A\nq002,a\nq001,A\n";
        let t = tally(&key, csv.as_bytes()).unwrap();
        assert_eq!(t.responses, 4);
        assert_eq!(t.votes["ours"], 3);
        assert_eq!(t.preference_pct["ours"], 75.0);
        assert_eq!(t.preference_pct["gpt"], 25.0);
        assert!(tally(&key, "item_id,choice\nq009,A\n".as_bytes()).is_err());
    }
}
