# unittest init file