#include "chairside/speech.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace chairside::speech {

namespace {

int ratio_need(double ratio, int window) {
  return static_cast<int>(std::ceil(ratio * window - 1e-9));
}

std::uint32_t read_u32(const std::vector<char>& b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t read_u16(const std::vector<char>& b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::ostream& out, std::uint16_t v) {
  out.put(static_cast<char>(v & 0xff));
  out.put(static_cast<char>((v >> 8) & 0xff));
}

struct Phrase {
  fsm::Keyword keyword;
  std::string_view text;
};

// Priority order: escalation first.
constexpr std::array kPhrases{
    Phrase{fsm::Keyword::RemoteControl, "remote control"},
    Phrase{fsm::Keyword::Help, "help"},
    Phrase{fsm::Keyword::GoLeft, "go left"},
    Phrase{fsm::Keyword::GoLeft, "go to the left"},
    Phrase{fsm::Keyword::GoRight, "go right"},
    Phrase{fsm::Keyword::GoRight, "go to the right"},
    Phrase{fsm::Keyword::GoBack, "go back"},
    Phrase{fsm::Keyword::GoBack, "go to the back"},
};

}  // namespace

void VadConfig::validate() const {
  if (!(energy_threshold >= 0.0)) throw std::invalid_argument("vad.energy_threshold must be >= 0");
  if (padding_window < 1) throw std::invalid_argument("vad.padding_window must be >= 1");
  if (!(start_ratio > 0.0 && start_ratio <= 1.0)) throw std::invalid_argument("vad.start_ratio must be in (0, 1]");
  if (!(end_ratio > 0.0 && end_ratio <= 1.0)) throw std::invalid_argument("vad.end_ratio must be in (0, 1]");
  if (!(max_utterance > 0.0)) throw std::invalid_argument("vad.max_utterance must be > 0");
}

int VadConfig::max_frames() const {
  return std::max(1, static_cast<int>(std::lround(max_utterance / kFrameSeconds)));
}

double frame_rms(const AudioFrame& frame) {
  if (frame.samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto s : frame.samples) acc += static_cast<double>(s) * static_cast<double>(s);
  return std::sqrt(acc / static_cast<double>(frame.samples.size()));
}

Voicing classify_frame(const AudioFrame& frame, const VadConfig& config) {
  if (frame.sample_rate <= 0 || frame.samples.size() != AudioFrame::expected_length(frame.sample_rate)) {
    throw std::invalid_argument("classify_frame: frame must hold exactly 30 ms of samples");
  }
  return frame_rms(frame) > config.energy_threshold ? Voicing::Voiced : Voicing::Unvoiced;
}

UtteranceCollector::UtteranceCollector(VadConfig config)
    : config_(config),
      start_need_(ratio_need(config.start_ratio, config.padding_window)),
      end_need_(ratio_need(config.end_ratio, config.padding_window)) {
  config_.validate();
}

void UtteranceCollector::reset_window() { window_.clear(); }

std::optional<UtteranceSpan> UtteranceCollector::push(bool voiced) {
  const std::size_t index = next_index_++;
  if (busy_) {
    ++discarded_;
    return std::nullopt;
  }
  window_.emplace_back(index, voiced);
  if (window_.size() > static_cast<std::size_t>(config_.padding_window)) window_.pop_front();

  if (!triggered_) {
    const auto n_voiced = std::count_if(window_.begin(), window_.end(), [](const auto& f) { return f.second; });
    if (n_voiced >= start_need_) {
      triggered_ = true;
      start_ = std::find_if(window_.begin(), window_.end(), [](const auto& f) { return f.second; })->first;
      last_voiced_ = index;
      reset_window();
    }
    return std::nullopt;
  }

  if (voiced) last_voiced_ = index;
  const auto n_unvoiced = std::count_if(window_.begin(), window_.end(), [](const auto& f) { return !f.second; });
  if (n_unvoiced >= end_need_) {
    triggered_ = false;
    reset_window();
    return UtteranceSpan{start_, last_voiced_};
  }
  if (index - start_ + 1 >= static_cast<std::size_t>(config_.max_frames())) {
    triggered_ = false;
    reset_window();
    return UtteranceSpan{start_, index};
  }
  return std::nullopt;
}

std::optional<UtteranceSpan> UtteranceCollector::finish() {
  if (!triggered_) return std::nullopt;
  triggered_ = false;
  reset_window();
  return UtteranceSpan{start_, last_voiced_};
}

std::vector<UtteranceSpan> collect_utterances(const std::vector<bool>& labels, const VadConfig& config,
                                              int transcription_frames) {
  UtteranceCollector collector(config);
  std::vector<UtteranceSpan> out;
  int busy_left = 0;
  for (const bool voiced : labels) {
    if (busy_left > 0) {
      collector.set_busy(true);
      collector.push(voiced);
      if (--busy_left == 0) collector.set_busy(false);
      continue;
    }
    if (auto span = collector.push(voiced)) {
      out.push_back(*span);
      busy_left = transcription_frames;
    }
  }
  if (auto span = collector.finish()) out.push_back(*span);
  return out;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

ScriptedTranscriber::ScriptedTranscriber(std::map<std::string, std::string> script,
                                         double corruption_rate, std::uint64_t seed)
    : script_(std::move(script)), corruption_rate_(corruption_rate), rng_(seed) {}

std::optional<std::string> ScriptedTranscriber::transcribe(const Utterance& utterance) {
  const auto it = script_.find(utterance.id);
  if (it == script_.end()) return std::nullopt;
  const std::string text = to_lower(it->second);
  if (corruption_rate_ <= 0.0) return text;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> letter('a', 'z');
  std::istringstream words(text);
  std::string word;
  std::string out;
  while (words >> word) {
    if (unit(rng_) < corruption_rate_) {
      for (auto& c : word) c = static_cast<char>(letter(rng_));
    }
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (const unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
    } else if (std::isalnum(c)) {
      if (pending_space) out += ' ';
      pending_space = false;
      out += static_cast<char>(std::tolower(c));
    }
  }
  return out;
}

std::optional<KeywordCommand> detect_keywords(std::string_view text) {
  const std::string padded = " " + normalize_text(text) + " ";
  for (const auto& phrase : kPhrases) {
    const std::string needle = " " + std::string(phrase.text) + " ";
    if (padded.find(needle) != std::string::npos) {
      return KeywordCommand{phrase.keyword, std::string(phrase.text)};
    }
  }
  return std::nullopt;
}

fsm::Event keyword_event(const KeywordCommand& command) { return fsm::Event::spoken(command.keyword); }

SpeechPipeline::SpeechPipeline(VadConfig config, std::shared_ptr<Transcriber> transcriber,
                               int transcription_frames, IdResolver resolve_id)
    : config_(config),
      transcriber_(std::move(transcriber)),
      transcription_frames_(std::max(0, transcription_frames)),
      resolve_id_(std::move(resolve_id)),
      collector_(config) {}

std::optional<SpeechResult> SpeechPipeline::complete_transcription() {
  Utterance utt = std::move(*pending_);
  pending_.reset();
  collector_.set_busy(false);
  SpeechResult result{utt.id, utt.start_time, utt.end_time, std::nullopt, std::nullopt};
  if (transcriber_) result.text = transcriber_->transcribe(utt);
  if (!result.text) {
    ++dropped_;
    return result;
  }
  result.command = detect_keywords(*result.text);
  return result;
}

std::optional<SpeechResult> SpeechPipeline::push(const AudioFrame& frame) {
  const std::size_t index = collector_.frames_seen();
  if (pending_) {
    collector_.push(false);  // dropped while busy
    if (--pending_countdown_ <= 0) return complete_transcription();
    return std::nullopt;
  }

  if (recent_.empty()) recent_first_ = index;
  recent_.push_back(frame);
  const bool voiced = classify_frame(frame, config_) == Voicing::Voiced;
  const auto span = collector_.push(voiced);

  if (span) {
    Utterance utt;
    for (std::size_t i = span->first; i <= span->last; ++i) {
      if (i >= recent_first_ && i - recent_first_ < recent_.size()) {
        utt.frames.push_back(recent_[i - recent_first_]);
      }
    }
    utt.start_time = utt.frames.empty() ? 0.0 : utt.frames.front().start_time;
    utt.end_time = utt.frames.empty() ? 0.0 : utt.frames.back().start_time + kFrameSeconds;
    ++emitted_;
    utt.id = resolve_id_ ? resolve_id_(utt.start_time, utt.end_time) : "u" + std::to_string(emitted_);
    recent_.clear();
    pending_ = std::move(utt);
    pending_countdown_ = transcription_frames_;
    collector_.set_busy(true);
    if (pending_countdown_ == 0) return complete_transcription();
    return std::nullopt;
  }

  // Only the padding window can still become part of a future utterance.
  if (!collector_.triggered()) {
    while (recent_.size() > static_cast<std::size_t>(config_.padding_window)) {
      recent_.pop_front();
      ++recent_first_;
    }
  }
  return std::nullopt;
}

PcmAudio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_wav: cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::string_view(bytes.data(), 4) != "RIFF" ||
      std::string_view(bytes.data() + 8, 4) != "WAVE") {
    throw std::runtime_error("read_wav: not a RIFF/WAVE file");
  }
  PcmAudio audio;
  bool have_fmt = false;
  std::size_t at = 12;
  while (at + 8 <= bytes.size()) {
    const std::string_view id(bytes.data() + at, 4);
    const std::uint32_t size = read_u32(bytes, at + 4);
    const std::size_t body = at + 8;
    if (body + size > bytes.size()) throw std::runtime_error("read_wav: truncated chunk");
    if (id == "fmt ") {
      if (size < 16) throw std::runtime_error("read_wav: short fmt chunk");
      const auto format = read_u16(bytes, body);
      const auto channels = read_u16(bytes, body + 2);
      audio.sample_rate = static_cast<int>(read_u32(bytes, body + 4));
      const auto bits = read_u16(bytes, body + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw std::runtime_error("read_wav: expected 16-bit mono PCM");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw std::runtime_error("read_wav: data before fmt");
      audio.samples.resize(size / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        audio.samples[i] = static_cast<std::int16_t>(read_u16(bytes, body + 2 * i));
      }
      return audio;
    }
    at = body + size + (size & 1u);
  }
  throw std::runtime_error("read_wav: no data chunk");
}

void write_wav(const std::filesystem::path& path, const PcmAudio& audio) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_wav: cannot open " + path.string());
  const auto data_size = static_cast<std::uint32_t>(audio.samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_size);
  out.write("WAVEfmt ", 8);
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_size);
  for (const auto s : audio.samples) put_u16(out, static_cast<std::uint16_t>(s));
}

std::vector<AudioFrame> frames_from_pcm(const PcmAudio& audio) {
  const std::size_t n = AudioFrame::expected_length(audio.sample_rate);
  std::vector<AudioFrame> frames;
  if (n == 0) return frames;
  for (std::size_t at = 0; at + n <= audio.samples.size(); at += n) {
    frames.push_back({std::vector<std::int16_t>(audio.samples.begin() + static_cast<std::ptrdiff_t>(at),
                                                audio.samples.begin() + static_cast<std::ptrdiff_t>(at + n)),
                      audio.sample_rate, static_cast<double>(frames.size()) * kFrameSeconds});
  }
  return frames;
}

std::vector<bool> read_label_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_label_file: cannot open " + path.string());
  std::vector<bool> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = normalize_text(line.substr(0, line.find('#')));
    if (t.empty()) continue;
    if (t == "1" || t == "voiced") {
      labels.push_back(true);
    } else if (t == "0" || t == "unvoiced") {
      labels.push_back(false);
    } else {
      throw std::runtime_error("read_label_file: line " + std::to_string(line_no) + ": bad label '" + line + "'");
    }
  }
  return labels;
}

std::map<std::string, std::string> read_keyword_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_keyword_script: cannot open " + path.string());
  const auto doc = nlohmann::json::parse(in);
  if (!doc.is_object()) throw std::runtime_error("read_keyword_script: expected a JSON object");
  std::map<std::string, std::string> script;
  for (const auto& [id, text] : doc.items()) {
    if (!text.is_string()) throw std::runtime_error("read_keyword_script: '" + id + "' is not a string");
    script[id] = text.get<std::string>();
  }
  return script;
}

}  // namespace chairside::speech
