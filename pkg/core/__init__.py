# ScoutLabel Core Module
