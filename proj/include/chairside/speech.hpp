#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chairside/fsm.hpp"

namespace chairside::speech {

inline constexpr double kFrameSeconds = 0.03;

struct AudioFrame {
  std::vector<std::int16_t> samples;
  int sample_rate = 16000;
  double start_time = 0.0;

  static std::size_t expected_length(int sample_rate) {
    return static_cast<std::size_t>(sample_rate) * 3 / 100;
  }
};

struct VadConfig {
  double energy_threshold = 300.0;  // RMS, 16-bit sample units
  int padding_window = 10;          // frames
  double start_ratio = 0.9;
  double end_ratio = 0.9;
  double max_utterance = 10.0;  // seconds

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
  int max_frames() const;
};

enum class Voicing { Unvoiced, Voiced };

double frame_rms(const AudioFrame& frame);

/// Energy VAD. Throws std::invalid_argument for a frame that is not exactly
/// 30 ms long at its sample rate.
Voicing classify_frame(const AudioFrame& frame, const VadConfig& config);

/// Inclusive frame-index span of one utterance.
struct UtteranceSpan {
  std::size_t first = 0;
  std::size_t last = 0;
  friend bool operator==(const UtteranceSpan&, const UtteranceSpan&) = default;
};

/// Padding-window trigger over voiced/unvoiced labels. Triggers once the
/// window's voiced share reaches start_ratio (utterance starts at the oldest
/// voiced frame in the window) and closes once the unvoiced share reaches
/// end_ratio (utterance ends at the last voiced frame). Frames pushed while
/// busy are dropped.
class UtteranceCollector {
 public:
  explicit UtteranceCollector(VadConfig config);

  std::optional<UtteranceSpan> push(bool voiced);
  /// Closes an open utterance at end of stream.
  std::optional<UtteranceSpan> finish();

  void set_busy(bool busy) { busy_ = busy; }
  bool busy() const { return busy_; }
  bool triggered() const { return triggered_; }
  std::size_t frames_seen() const { return next_index_; }
  std::size_t frames_discarded() const { return discarded_; }

 private:
  void reset_window();

  VadConfig config_;
  int start_need_;
  int end_need_;
  std::deque<std::pair<std::size_t, bool>> window_;
  bool triggered_ = false;
  bool busy_ = false;
  std::size_t start_ = 0;
  std::size_t last_voiced_ = 0;
  std::size_t next_index_ = 0;
  std::size_t discarded_ = 0;
};

/// Batch form over a label sequence; the `transcription_frames` frames after
/// each emitted utterance are dropped as if a transcription were running.
std::vector<UtteranceSpan> collect_utterances(const std::vector<bool>& labels, const VadConfig& config,
                                              int transcription_frames = 0);

struct Utterance {
  std::string id;
  std::vector<AudioFrame> frames;
  double start_time = 0.0;
  double end_time = 0.0;
};

class Transcriber {
 public:
  virtual ~Transcriber() = default;
  /// Returns nullopt when the transcriber cannot produce text.
  virtual std::optional<std::string> transcribe(const Utterance& utterance) = 0;
};

/// Maps utterance ids to configured strings, optionally replacing words with
/// random letters at `corruption_rate`.
class ScriptedTranscriber : public Transcriber {
 public:
  explicit ScriptedTranscriber(std::map<std::string, std::string> script,
                               double corruption_rate = 0.0, std::uint64_t seed = 0);
  std::optional<std::string> transcribe(const Utterance& utterance) override;

 private:
  std::map<std::string, std::string> script_;
  double corruption_rate_;
  std::mt19937_64 rng_;
};

std::string to_lower(std::string_view text);

struct KeywordCommand {
  fsm::Keyword keyword = fsm::Keyword::Help;
  std::string matched_text;
};

/// Lowercases, strips punctuation and collapses whitespace.
std::string normalize_text(std::string_view text);

/// Whole-word phrase match in priority order RemoteControl > Help > GoLeft >
/// GoRight > GoBack.
std::optional<KeywordCommand> detect_keywords(std::string_view text);

fsm::Event keyword_event(const KeywordCommand& command);

struct SpeechResult {
  std::string utterance_id;
  double start_time = 0.0;
  double end_time = 0.0;
  std::optional<std::string> text;
  std::optional<KeywordCommand> command;
};

/// Classifier, collector, transcriber and keyword spotter on one stream. A
/// collected utterance is transcribed after `transcription_frames` further
/// frames, all of which are discarded.
class SpeechPipeline {
 public:
  using IdResolver = std::function<std::string(double start_time, double end_time)>;

  SpeechPipeline(VadConfig config, std::shared_ptr<Transcriber> transcriber,
                 int transcription_frames, IdResolver resolve_id = {});

  std::optional<SpeechResult> push(const AudioFrame& frame);
  std::size_t dropped_transcriptions() const { return dropped_; }

 private:
  std::optional<SpeechResult> complete_transcription();

  VadConfig config_;
  std::shared_ptr<Transcriber> transcriber_;
  int transcription_frames_;
  IdResolver resolve_id_;
  UtteranceCollector collector_;
  std::deque<AudioFrame> recent_;  // frames since the oldest one still eligible
  std::size_t recent_first_ = 0;   // frame index of recent_.front()
  std::optional<Utterance> pending_;
  int pending_countdown_ = 0;
  std::size_t emitted_ = 0;
  std::size_t dropped_ = 0;
};

struct PcmAudio {
  std::vector<std::int16_t> samples;
  int sample_rate = 16000;
};

/// 16-bit little-endian mono PCM WAV. Throws std::runtime_error otherwise.
PcmAudio read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const PcmAudio& audio);

/// Splits into whole 30 ms frames; a trailing partial frame is dropped.
std::vector<AudioFrame> frames_from_pcm(const PcmAudio& audio);

/// One voiced/unvoiced flag per line ("1"/"0", "voiced"/"unvoiced"); blank
/// lines and '#' comments are skipped.
std::vector<bool> read_label_file(const std::filesystem::path& path);

/// JSON object mapping utterance ids to transcripts.
std::map<std::string, std::string> read_keyword_script(const std::filesystem::path& path);

}  // namespace chairside::speech
