
import java.util.*;
import static java.lang.Math.max;

public class MonthDays {
    public static void main(String[] args) {
        Scanner input = new Scanner(System.in);
        System.out.print("Enter a month and year: ");
        int month = input.nextInt(), year = input.nextInt();
        System.out.println(Helper.daysIn(month, year) + " days, at least " + max(28, month));
    }
}
