//! CDM collaboration: topic threads with per-member mute, shared Data
//! Cards, thread emphasis and meeting scheduling.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{FmdsError, Result};
use crate::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thread {
    pub thread_id: String,
    pub topic: String,
    pub members: BTreeSet<String>,
    pub emphasized: bool,
    /// Notification mute per member; members start muted.
    pub muted: BTreeMap<String, bool>,
    /// Participants currently in the thread's voice room. Metadata only.
    pub voice_presence: u32,
    pub created_at: Timestamp,
}

impl Thread {
    pub fn is_muted_for(&self, actor: &str) -> bool {
        self.muted.get(actor).copied().unwrap_or(true)
    }

    pub fn muted_members(&self) -> BTreeSet<String> {
        self.members.iter().filter(|m| self.is_muted_for(m)).cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MessageBody {
    Text { text: String },
    Card { card_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub message_id: String,
    pub thread_id: String,
    pub sender: String,
    pub sent_at: Timestamp,
    pub body: MessageBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MeetingSource {
    Button,
    Hotkey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meeting {
    pub meeting_id: String,
    pub thread_id: String,
    pub scheduled_for: Timestamp,
    pub title: String,
    pub created_via: MeetingSource,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Collaboration {
    threads: IndexMap<String, Thread>,
    messages: BTreeMap<String, Vec<Message>>,
    meetings: Vec<Meeting>,
    message_counter: u64,
}

impl Collaboration {
    pub fn threads(&self) -> impl Iterator<Item = &Thread> {
        self.threads.values()
    }

    pub fn thread(&self, thread_id: &str) -> Result<&Thread> {
        self.threads
            .get(thread_id)
            .ok_or_else(|| FmdsError::UnknownThread(thread_id.to_string()))
    }

    fn thread_mut(&mut self, thread_id: &str) -> Result<&mut Thread> {
        self.threads
            .get_mut(thread_id)
            .ok_or_else(|| FmdsError::UnknownThread(thread_id.to_string()))
    }

    pub fn messages(&self, thread_id: &str) -> &[Message] {
        self.messages.get(thread_id).map_or(&[], Vec::as_slice)
    }

    /// Calendar feed: meetings by scheduled time, then id.
    pub fn calendar(&self) -> Vec<Meeting> {
        let mut feed = self.meetings.clone();
        feed.sort_by(|a, b| {
            a.scheduled_for
                .cmp(&b.scheduled_for)
                .then_with(|| a.meeting_id.cmp(&b.meeting_id))
        });
        feed
    }

    pub fn create_thread(&mut self, topic: &str, members: BTreeSet<String>, now: Timestamp) -> Result<Thread> {
        let topic = topic.trim();
        if topic.is_empty() {
            return Err(FmdsError::EmptyTopic);
        }
        let members: BTreeSet<String> = members
            .into_iter()
            .map(|m| m.trim().to_string())
            .filter(|m| !m.is_empty())
            .collect();
        if members.is_empty() {
            return Err(FmdsError::NoMembers);
        }
        let thread = Thread {
            thread_id: format!("thread-{}", self.threads.len() + 1),
            topic: topic.to_string(),
            muted: members.iter().map(|m| (m.clone(), true)).collect(),
            members,
            emphasized: false,
            voice_presence: 0,
            created_at: now,
        };
        self.threads.insert(thread.thread_id.clone(), thread.clone());
        Ok(thread)
    }

    /// Appends a message. `card_exists` resolves card attachments.
    pub fn post_message(
        &mut self,
        thread_id: &str,
        sender: &str,
        body: MessageBody,
        now: Timestamp,
        card_exists: impl Fn(&str) -> bool,
    ) -> Result<Message> {
        let thread = self.thread(thread_id)?;
        if !thread.members.contains(sender) {
            return Err(FmdsError::NotAMember {
                actor: sender.to_string(),
                thread_id: thread_id.to_string(),
            });
        }
        if let MessageBody::Card { card_id } = &body {
            if !card_exists(card_id) {
                return Err(FmdsError::UnknownCard(card_id.clone()));
            }
        }
        self.message_counter += 1;
        let message = Message {
            message_id: format!("msg-{}", self.message_counter),
            thread_id: thread_id.to_string(),
            sender: sender.to_string(),
            sent_at: now,
            body,
        };
        self.messages
            .entry(thread_id.to_string())
            .or_default()
            .push(message.clone());
        Ok(message)
    }

    /// Returns the thread and whether the flag actually changed.
    pub fn set_emphasis(&mut self, thread_id: &str, emphasized: bool) -> Result<(Thread, bool)> {
        let thread = self.thread_mut(thread_id)?;
        let changed = thread.emphasized != emphasized;
        thread.emphasized = emphasized;
        Ok((thread.clone(), changed))
    }

    pub fn set_mute(&mut self, thread_id: &str, member: &str, muted: bool) -> Result<(Thread, bool)> {
        let thread = self.thread_mut(thread_id)?;
        if !thread.members.contains(member) {
            return Err(FmdsError::NotAMember {
                actor: member.to_string(),
                thread_id: thread_id.to_string(),
            });
        }
        let changed = thread.is_muted_for(member) != muted;
        thread.muted.insert(member.to_string(), muted);
        Ok((thread.clone(), changed))
    }

    pub fn set_voice_presence(&mut self, thread_id: &str, count: u32) -> Result<(Thread, bool)> {
        let thread = self.thread_mut(thread_id)?;
        let changed = thread.voice_presence != count;
        thread.voice_presence = count;
        Ok((thread.clone(), changed))
    }

    pub fn schedule_meeting(
        &mut self,
        thread_id: &str,
        scheduled_for: Timestamp,
        title: &str,
        created_via: MeetingSource,
        now: Timestamp,
    ) -> Result<Meeting> {
        self.thread(thread_id)?;
        if scheduled_for <= now {
            return Err(FmdsError::PastTime(scheduled_for.to_iso()));
        }
        let meeting = Meeting {
            meeting_id: format!("mtg-{}", self.meetings.len() + 1),
            thread_id: thread_id.to_string(),
            scheduled_for,
            title: title.trim().to_string(),
            created_via,
        };
        self.meetings.push(meeting.clone());
        Ok(meeting)
    }
}
