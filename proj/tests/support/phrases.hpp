#pragma once

#include <string>
#include <utility>
#include <vector>

#include "chairside/fsm.hpp"

namespace phrases {

using chairside::fsm::Keyword;

inline const std::vector<std::pair<std::string, Keyword>> kKeywordPhrases{
    {"go left", Keyword::GoLeft},
    {"go right", Keyword::GoRight},
    {"go back", Keyword::GoBack},
    {"remote control", Keyword::RemoteControl},
    {"help", Keyword::Help},
    {"go to the left", Keyword::GoLeft},
    {"go to the right", Keyword::GoRight},
    {"go to the back", Keyword::GoBack},
    {"please go to the left now", Keyword::GoLeft},
    {"Go  Right!", Keyword::GoRight},
    {"could you go back, please", Keyword::GoBack},
    {"switch to remote control", Keyword::RemoteControl},
    {"help me go left", Keyword::Help},
    {"remote control, then help", Keyword::RemoteControl},
    {"go left or go right", Keyword::GoLeft},
    {"HELP", Keyword::Help},
};

inline const std::vector<std::string> kDistractors{
    "hello there",
    "it is a nice day",
    "go ahead",
    "i left the keys at home",
    "turn around",
    "the remote is on the table",
    "come here",
    "stop",
    "go forward",
    "where did you go",
    "back to the start",
    "right now",
    "control yourself",
    "let us go to the park",
    "please wait for me",
    "i am hungry",
    "good morning",
    "the left lane is closed",
    "what time is it",
    "",
};

}  // namespace phrases
