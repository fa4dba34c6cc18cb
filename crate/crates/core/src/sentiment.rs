//! Binary sentiment classification used by style selection and scoring.

use serde::Deserialize;

use crate::domain::Sentiment;
use crate::provider::{HttpJsonClient, ProviderError};
use crate::text::tokens;

pub trait SentimentProvider: Send + Sync {
    fn id(&self) -> &str;
    fn classify(&self, text: &str) -> Result<Sentiment, ProviderError>;
}

const POSITIVE_EN: &[&str] = &[
    "love", "lovely", "great", "good", "best", "funny", "hilarious", "cute", "happy", "awesome", "amazing", "laugh",
    "lol", "haha", "fun", "nice", "wonderful", "adorable", "brilliant", "genius", "perfect", "win", "smile", "enjoy",
    "cool", "beautiful", "sweet", "legend", "iconic", "wholesome",
];
const NEGATIVE_EN: &[&str] = &[
    "hate", "bad", "worst", "sad", "angry", "awful", "terrible", "boring", "ugly", "cry", "crying", "fail", "fear",
    "scared", "annoying", "stupid", "disaster", "pain", "broke", "lost", "lose", "horrible", "cringe", "tragic",
    "sorry", "died", "dead", "rip", "regret", "mess",
];
// Chinese entries are matched as substrings since tokens are single characters.
const POSITIVE_ZH: &[&str] = &[
    "哈哈", "笑", "可爱", "喜欢", "开心", "好玩", "厉害", "牛", "棒", "爱", "有趣", "优秀", "赞", "快乐", "绝了",
];
const NEGATIVE_ZH: &[&str] = &[
    "哭", "难过", "生气", "讨厌", "无聊", "惨", "怕", "累", "烦", "尴尬", "失败", "心疼", "崩溃", "气死", "痛",
];

/// Counts lexicon hits; ties and texts with no hits are positive.
#[derive(Debug, Default)]
pub struct LexiconSentiment;

impl LexiconSentiment {
    pub fn score(text: &str) -> i64 {
        let toks = tokens(text);
        let en = |list: &[&str]| toks.iter().filter(|t| list.contains(&t.as_str())).count() as i64;
        let zh = |list: &[&str]| list.iter().map(|w| text.matches(w).count() as i64).sum::<i64>();
        en(POSITIVE_EN) + zh(POSITIVE_ZH) - en(NEGATIVE_EN) - zh(NEGATIVE_ZH)
    }
}

impl SentimentProvider for LexiconSentiment {
    fn id(&self) -> &str {
        "mock-lexicon"
    }

    fn classify(&self, text: &str) -> Result<Sentiment, ProviderError> {
        Ok(if Self::score(text) < 0 {
            Sentiment::Negative
        } else {
            Sentiment::Positive
        })
    }
}

/// Posts `{model, input}` and reads `{label: "positive" | "negative"}`.
pub struct HttpSentiment {
    client: HttpJsonClient,
    id: String,
}

impl HttpSentiment {
    pub fn new(client: HttpJsonClient) -> Self {
        let id = format!("{}#{}", client.endpoint(), client.model());
        Self { client, id }
    }
}

#[derive(Deserialize)]
struct LabelResponse {
    label: Sentiment,
}

impl SentimentProvider for HttpSentiment {
    fn id(&self) -> &str {
        &self.id
    }

    fn classify(&self, text: &str) -> Result<Sentiment, ProviderError> {
        let body = serde_json::json!({ "model": self.client.model(), "input": text });
        let resp: LabelResponse = self.client.post_json(&body)?;
        Ok(resp.label)
    }
}
