//! Markdown command reference generated from the argument grammar.

use clap::Command;

/// The help text of the root command and of every subcommand, in
/// declaration order, as one Markdown page.
pub fn markdown(mut root: Command) -> String {
    root.build();
    let name = root.get_name().to_owned();
    let mut out = format!(
        "# `{name}` command reference\n\n\
         Generated by `{name} reference`. Do not edit by hand.\n\n"
    );
    section(&mut out, &name, &mut root);
    for sub in root.get_subcommands_mut() {
        if sub.get_name() == "help" {
            continue;
        }
        let title = format!("{name} {}", sub.get_name());
        section(&mut out, &title, sub);
    }
    out
}

fn section(out: &mut String, title: &str, cmd: &mut Command) {
    let help = cmd.render_long_help().to_string();
    out.push_str(&format!("## `{title}`\n\n```text\n{}\n```\n\n", help.trim_end()));
}
